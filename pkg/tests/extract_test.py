import pytest
from hypothesis import given
from hypothesis import settings

from realizer.cli import demo_text
from realizer.compiler import abstract_eliminate
from realizer.compiler import parse_lambda
from realizer.dovetail import Certified
from realizer.dovetail import Failed
from realizer.dovetail import PENDING
from realizer.dovetail import worst_reason
from realizer.extract import BranchSummary
from realizer.extract import decode_numeral
from realizer.extract import DecodeError
from realizer.extract import extract_process
from realizer.extract import extract_witness
from realizer.extract import ExtractResult
from realizer.extract import majority
from realizer.syntax import App
from realizer.syntax import apply
from realizer.syntax import DELTA
from realizer.syntax import GAMMA
from realizer.syntax import I
from realizer.syntax import numeral
from realizer.syntax import parse_term
from realizer.syntax import PI0
from realizer.syntax import Process
from realizer.syntax import SUCC
from testing.strategies import DIVERGING
from testing.strategies import fork_instances
from testing.strategies import STUCK


def _compile(text):
    return abstract_eliminate(parse_lambda(text))


@pytest.mark.parametrize(
    ('args', 'expected'),
    (
        ((Certified(1), Certified(1), PENDING), Certified(1)),
        ((Certified(1), PENDING, Certified(1)), Certified(1)),
        ((Failed('stuck'), Certified(2), Certified(2)), Certified(2)),
        ((Certified(1), PENDING, PENDING), PENDING),
        ((Certified(1), Certified(2), PENDING), PENDING),
        ((Failed('stuck'), Failed('fuel'), PENDING), Failed('fuel')),
        (
            (Certified(1), Certified(2), Failed('stuck')),
            Failed('stuck', frozenset({1, 2})),
        ),
        (
            (Certified(1), Certified(2), Certified(3)),
            Failed('no-majority', frozenset({1, 2, 3})),
        ),
        (
            (Certified(1), Failed('undecodable-leaf'), Failed('stuck')),
            Failed('undecodable-leaf', frozenset({1})),
        ),
        ((PENDING, PENDING, PENDING), PENDING),
    ),
)
def test_majority(args, expected):
    assert majority(*args) == expected


def test_worst_reason():
    assert worst_reason([]) == 'no-majority'
    assert worst_reason(['stuck', 'fuel']) == 'fuel'
    assert worst_reason(['stuck', 'undecodable-leaf']) == 'undecodable-leaf'


@pytest.mark.parametrize('n', (0, 1, 7, 42))
def test_decode_numeral(n):
    assert decode_numeral(numeral(n)) == n


def test_decode_lazy_numerals():
    assert decode_numeral(App(SUCC, App(SUCC, numeral(3)))) == 5
    assert decode_numeral(_compile('(\\n.\\f.\\x. n f (f x)) n:2')) == 3


@pytest.mark.parametrize(
    ('text', 'reason'),
    (
        ('K', 'not-a-numeral'),
        ('p', 'not-a-numeral'),
        ('h0', 'not-a-numeral'),
        ('gamma n:0 n:0 n:0', 'not-a-numeral'),
        ('W W W', 'fuel'),
    ),
)
def test_decode_numeral_fails(text, reason):
    with pytest.raises(DecodeError) as exc_info:
        decode_numeral(parse_term(text), fuel=1000)

    assert exc_info.value.reason == reason


@pytest.mark.parametrize(
    ('result', 'text'),
    (
        (ExtractResult('value', value=5), 'value 5'),
        (
            ExtractResult('ambiguous', candidates=frozenset({1, 0})),
            'ambiguous {0, 1}',
        ),
        (ExtractResult('fail', reason='fuel'), 'fail fuel'),
    ),
)
def test_extract_result_str(result, text):
    assert str(result) == text


@pytest.mark.parametrize(
    ('text', 'expected'),
    (
        ('\\x. (x) n:4', ExtractResult('value', value=4)),
        ('\\x. x', ExtractResult('fail', reason='stuck')),
        ('\\x. (x) h0', ExtractResult('fail', reason='undecodable-leaf')),
        ('\\x. K', ExtractResult('fail', reason='stuck')),
        ('\\x. p', ExtractResult('fail', reason='stuck')),
        ('\\x. W W W', ExtractResult('fail', reason='fuel')),
    ),
)
def test_extract_witness(text, expected):
    report = extract_witness(_compile(text), fuel=1000)
    assert report.result == expected


def test_extract_fork_example():
    report = extract_witness(_compile(demo_text('fork_of_forks')))
    assert report.result == ExtractResult('value', value=5)
    assert set(report.payloads()) == {3, 5}
    statuses = [b.status for b in report.branches]
    assert statuses.count('pruned') == 1


def test_extract_both_answers():
    report = extract_witness(_compile(demo_text('theta_double')))
    assert report.result.kind == 'ambiguous'
    assert report.result.candidates == {0, 1}
    assert report.result.reason == 'stuck'
    assert str(report.result) == 'ambiguous {0, 1}'


@pytest.mark.parametrize(
    ('name', 'value'),
    (('numerals', 3), ('continuation', 6)),
)
def test_extract_demos(name, value):
    report = extract_witness(_compile(demo_text(name)))
    assert report.result == ExtractResult('value', value=value)


def test_extract_with_a_diverging_branch():
    leaf = App(DELTA, numeral(2))
    t = App(App(App(GAMMA, leaf), DIVERGING), leaf)
    report = extract_process(Process(t, PI0), fuel=10_000)
    assert report.result == ExtractResult('value', value=2)
    statuses = [b.status for b in report.branches]
    assert statuses == ['accept', 'pruned', 'accept']


def test_extract_report_json():
    slow_stuck = App(I, STUCK)
    t = apply(GAMMA, App(DELTA, numeral(1)), slow_stuck, slow_stuck)
    report = extract_process(Process(t, PI0), fuel=100)
    assert report.result == ExtractResult('fail', reason='stuck')
    assert report.branches == (
        BranchSummary((0,), 'accept', 'oracle', 1),
        BranchSummary((1,), 'stuck', 'head-constant', None),
        BranchSummary((2,), 'stuck', 'head-constant', None),
    )
    data = report.to_json()
    assert data['format'] == 1
    assert data['result'] == 'fail'
    assert data['reason'] == 'stuck'
    assert data['payloads'] == [1]
    assert data['steps'] == report.steps
    assert data['branches'][1] == {
        'path': [1],
        'status': 'stuck',
        'detail': 'head-constant',
        'payload': None,
    }


def test_extract_warns_without_a_value(caplog):
    extract_witness(_compile('\\x. K'), fuel=100)
    assert 'extraction gave fail stuck' in caplog.text


@settings(max_examples=100, deadline=None)
@given(instance=fork_instances())
def test_extract_planted_value(instance):
    t, planted = instance
    report = extract_process(Process(t, PI0), fuel=100_000)
    assert report.result == ExtractResult('value', value=planted)
