import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from realizer.extract import decode_numeral
from realizer.forcing import CondSeq
from realizer.machine import Accept
from realizer.machine import ARITY
from realizer.machine import Branch3
from realizer.machine import exec_tree
from realizer.machine import exec_tree_to_json
from realizer.machine import format_trace
from realizer.machine import in_pole
from realizer.machine import Leaf
from realizer.machine import Next
from realizer.machine import OracleConfig
from realizer.machine import run_linear
from realizer.machine import RunOutcome
from realizer.machine import Scheduler
from realizer.machine import step
from realizer.machine import Stuck
from realizer.machine import trace
from realizer.machine import TraceLine
from realizer.syntax import ABORT
from realizer.syntax import App
from realizer.syntax import apply
from realizer.syntax import B
from realizer.syntax import C
from realizer.syntax import CC
from realizer.syntax import Cert
from realizer.syntax import CHI
from realizer.syntax import CHI_PRIME
from realizer.syntax import DELTA
from realizer.syntax import E
from realizer.syntax import FRAK_C
from realizer.syntax import GAMMA
from realizer.syntax import h_indices
from realizer.syntax import HConst
from realizer.syntax import I
from realizer.syntax import Instr
from realizer.syntax import K
from realizer.syntax import k_term
from realizer.syntax import KAPPA
from realizer.syntax import numeral
from realizer.syntax import Oracle
from realizer.syntax import parse_term
from realizer.syntax import PI0
from realizer.syntax import Process
from realizer.syntax import Stack
from realizer.syntax import stack
from realizer.syntax import STOP
from realizer.syntax import W
from testing.strategies import proof_like_terms
from testing.strategies import small_terms
from testing.strategies import stacks
from testing.strategies import terms

xi, eta, zeta = HConst(7), HConst(8), HConst(9)
pi = stack(HConst(5), HConst(6))
COLLECT = OracleConfig(mode='collector')


def _with(*items):
    return Stack((*items, *pi))


@pytest.mark.parametrize(
    ('process', 'expected'),
    (
        pytest.param(Process(STOP, pi), Accept('stop'), id='1-stop'),
        pytest.param(
            Process(ABORT, _with(xi)),
            Next(Process(xi, PI0), 2),
            id='2-abort',
        ),
        pytest.param(
            Process(GAMMA, _with(xi, eta, zeta)),
            Branch3(Process(xi, pi), Process(eta, pi), Process(zeta, pi)),
            id='3-fork',
        ),
        pytest.param(
            Process(E, _with(HConst(0), HConst(0), xi, eta)),
            Next(Process(eta, pi), 4),
            id='4-equal',
        ),
        pytest.param(
            Process(E, _with(HConst(0), HConst(1), xi, eta)),
            Next(Process(xi, pi), 5),
            id='5-distinct',
        ),
        pytest.param(
            Process(KAPPA, _with(xi)),
            Next(Process(xi, _with(HConst(0))), 6),
            id='6-fresh',
        ),
        pytest.param(
            Process(App(xi, eta), pi),
            Next(Process(xi, _with(eta)), 7),
            id='7-push',
        ),
        pytest.param(
            Process(I, _with(xi)),
            Next(Process(xi, pi), 8),
            id='8-I',
        ),
        pytest.param(
            Process(K, _with(xi, eta)),
            Next(Process(xi, pi), 9),
            id='9-K',
        ),
        pytest.param(
            Process(W, _with(xi, eta)),
            Next(Process(xi, _with(eta, eta)), 10),
            id='10-W',
        ),
        pytest.param(
            Process(C, _with(xi, eta, zeta)),
            Next(Process(xi, _with(zeta, eta)), 11),
            id='11-C',
        ),
        pytest.param(
            Process(B, _with(xi, eta, zeta)),
            Next(Process(xi, _with(App(eta, zeta))), 12),
            id='12-B',
        ),
        pytest.param(
            Process(CC, _with(xi)),
            Next(Process(xi, _with(k_term(pi))), 13),
            id='13-cc',
        ),
        pytest.param(
            Process(CHI, _with(xi)),
            Next(Process(xi, stack(HConst(6), HConst(5))), 14),
            id='14-chi',
        ),
        pytest.param(
            Process(CHI_PRIME, _with(xi, eta)),
            Next(Process(eta, pi.push_back(xi)), 15),
            id='15-chi-prime',
        ),
    ),
)
def test_rules(process, expected):
    assert step(process) == expected


@pytest.mark.parametrize(
    ('process', 'reason'),
    (
        (Process(xi, pi), 'head-constant'),
        (Process(Cert(CondSeq()), pi), 'head-constant'),
        (Process(FRAK_C, pi), 'head-constant'),
        (Process(DELTA, stack(numeral(3))), 'head-constant'),
        (Process(K, stack(xi)), 'arity'),
        (Process(GAMMA, stack(xi, eta)), 'arity'),
        (Process(ABORT, PI0), 'arity'),
        (Process(CHI, stack(xi)), 'empty-back'),
        (Process(E, stack(K, K, xi, eta)), 'no-rule'),
        (Process(E, stack(HConst(0), K, xi, eta)), 'no-rule'),
    ),
)
def test_stuck(process, reason):
    assert step(process) == Stuck(reason)


@pytest.mark.parametrize(
    ('cfg', 'arg', 'expected'),
    (
        (COLLECT, numeral(3), Accept('oracle', 3, rule='oracle')),
        (
            OracleConfig.parse('check:3'),
            numeral(3),
            Accept('oracle', 3, rule='oracle'),
        ),
        (OracleConfig.parse('check:4'), numeral(3), Stuck('oracle-reject')),
        (COLLECT, K, Stuck('oracle-reject')),
        (COLLECT._replace(decode_fuel=5), numeral(30), Stuck('oracle-reject')),
        (
            OracleConfig(mode='collector', name='eps'),
            numeral(1),
            Stuck('head-constant'),
        ),
    ),
)
def test_oracle(cfg, arg, expected):
    assert step(Process(DELTA, stack(arg)), cfg) == expected


def test_oracle_without_argument():
    assert step(Process(DELTA, PI0), COLLECT) == Stuck('arity')


def test_other_oracle_names_are_constants():
    assert step(Process(Oracle('eps'), stack(K)), COLLECT) == Stuck(
        'head-constant',
    )


@pytest.mark.parametrize(
    ('text', 'expected'),
    (
        ('none', OracleConfig()),
        ('collect', OracleConfig(mode='collector')),
        ('check:12', OracleConfig(mode='checker', target=12)),
    ),
)
def test_oracle_config_parse(text, expected):
    assert OracleConfig.parse(text) == expected


@pytest.mark.parametrize('text', ('check:', 'check:x', 'collector', ''))
def test_oracle_config_parse_invalid(text):
    with pytest.raises(ValueError):
        OracleConfig.parse(text)


def test_fresh_policy_next():
    cfg = OracleConfig(fresh='next')
    assert step(Process(KAPPA, _with(xi)), cfg) == Next(
        Process(xi, _with(HConst(8))),
        6,
    )


def test_chi_normalizes_certificates():
    cert = Cert(CondSeq(('x',)))
    marked = App(FRAK_C, App(FRAK_C, cert))
    p = Process(CHI, stack(xi, eta, marked))
    cfg = OracleConfig(normalize_certs=True)
    assert step(p, cfg) == Next(Process(xi, stack(cert, eta)), 14)
    assert step(p) == Next(Process(xi, stack(marked, eta)), 14)
    # anything else is handed over as it is
    q = Process(CHI, stack(xi, K))
    assert step(q, cfg) == Next(Process(xi, stack(K)), 14)


# the rule of every instruction with a single clause
RULES = {
    'a': 2, 'kappa': 6, 'I': 8, 'K': 9, 'W': 10, 'C': 11, 'B': 12,
    'cc': 13, 'chi': 14, "chi'": 15,
}


@settings(max_examples=1000)
@given(head=terms, rest=stacks())
def test_exactly_one_rule_applies(head, rest):
    p = Process(head, rest)
    result = step(p)
    assert result == step(p)
    match head:
        case App():
            assert result == Next(Process(head.fun, rest.push(head.arg)), 7)
        case Instr('p'):
            assert result == Accept('stop')
        case Instr(name) if name in ARITY and len(rest) < ARITY[name]:
            assert result == Stuck('arity')
        case Instr('gamma'):
            assert isinstance(result, Branch3)
        case Instr('e'):
            first, second = rest.items[:2]
            if isinstance(first, HConst) and isinstance(second, HConst):
                assert isinstance(result, Next)
                assert result.rule == (4 if first == second else 5)
            else:
                assert result == Stuck('no-rule')
        case Instr('chi') if len(rest) < 2:
            assert result == Stuck('empty-back')
        case Instr(name) if name in RULES:
            assert isinstance(result, Next)
            assert result.rule == RULES[name]
        case _:
            assert result == Stuck('head-constant')


RULE_POOL = (
    K, I, W, B, C, STOP, GAMMA, DELTA, HConst(0), HConst(3), numeral(1),
    App(K, HConst(2)),
)


def _items(rng, n):
    return tuple(RULE_POOL[i] for i in rng.integers(len(RULE_POOL), size=n))


def _least_unused(p):
    used = h_indices(p)
    return next(n for n in range(len(used) + 1) if n not in used)


def _rule_case(rule, rng):
    """a random process for ``rule`` and the result it must step to"""
    rest = _items(rng, rng.integers(4))
    x, y, z = _items(rng, 3)
    match rule:
        case 1:
            return Process(STOP, Stack(rest)), Accept('stop')
        case 2:
            return (
                Process(ABORT, Stack((x, *rest))),
                Next(Process(x, PI0), 2),
            )
        case 3:
            return (
                Process(GAMMA, Stack((x, y, z, *rest))),
                Branch3(*(Process(t, Stack(rest)) for t in (x, y, z))),
            )
        case 4:
            h = HConst(int(rng.integers(5)))
            return (
                Process(E, Stack((h, h, x, y, *rest))),
                Next(Process(y, Stack(rest)), 4),
            )
        case 5:
            hi, hj = (HConst(int(n)) for n in rng.choice(5, 2, replace=False))
            return (
                Process(E, Stack((hi, hj, x, y, *rest))),
                Next(Process(x, Stack(rest)), 5),
            )
        case 6:
            p = Process(KAPPA, Stack((x, *rest)))
            fresh = HConst(_least_unused(p))
            return p, Next(Process(x, Stack((fresh, *rest))), 6)
        case 7:
            return (
                Process(App(x, y), Stack(rest)),
                Next(Process(x, Stack((y, *rest))), 7),
            )
        case 8:
            return (
                Process(I, Stack((x, *rest))),
                Next(Process(x, Stack(rest)), 8),
            )
        case 9:
            return (
                Process(K, Stack((x, y, *rest))),
                Next(Process(x, Stack(rest)), 9),
            )
        case 10:
            return (
                Process(W, Stack((x, y, *rest))),
                Next(Process(x, Stack((y, y, *rest))), 10),
            )
        case 11:
            return (
                Process(C, Stack((x, y, z, *rest))),
                Next(Process(x, Stack((z, y, *rest))), 11),
            )
        case 12:
            return (
                Process(B, Stack((x, y, z, *rest))),
                Next(Process(x, Stack((App(y, z), *rest))), 12),
            )
        case 13:
            saved = k_term(Stack(rest))
            return (
                Process(CC, Stack((x, *rest))),
                Next(Process(x, Stack((saved, *rest))), 13),
            )
        case 14:
            return (
                Process(CHI, Stack((x, *rest, y))),
                Next(Process(x, Stack((y, *rest))), 14),
            )
        case 15:
            return (
                Process(CHI_PRIME, Stack((x, y, *rest))),
                Next(Process(y, Stack((*rest, x))), 15),
            )
        case _:
            raise NotImplementedError(rule)


@pytest.mark.parametrize('rule', range(1, 16))
def test_each_rule_on_random_processes(rule):
    rng = np.random.default_rng(rule)
    for _ in range(1000):
        p, expected = _rule_case(rule, rng)
        assert step(p) == expected


@settings(max_examples=200)
@given(
    i=st.integers(min_value=0, max_value=3),
    j=st.integers(min_value=0, max_value=3),
    rest=stacks(),
)
def test_e_discriminates_indices(i, j, rest):
    p = Process(E, Stack((HConst(i), HConst(j), xi, eta, *rest)))
    expected = Process(eta if i == j else xi, rest)
    assert step(p) == Next(expected, 4 if i == j else 5)


@settings(max_examples=200)
@given(
    head=small_terms,
    rest=stacks(),
    policy=st.sampled_from(['least', 'next']),
)
def test_kappa_index_is_fresh(head, rest, policy):
    p = Process(KAPPA, rest.push(head))
    result = step(p, OracleConfig(fresh=policy))
    assert isinstance(result, Next)
    fresh = result.process.stack.items[0]
    assert isinstance(fresh, HConst)
    assert fresh.index not in h_indices(p)


@settings(max_examples=500)
@given(
    items=stacks(max_size=8),
    varpi=stacks(),
)
def test_continuation_restores_the_stack(items, varpi):
    target = HConst(99)
    p = Process(k_term(items), varpi.push(target))
    outcome = run_linear(p, fuel=1000)
    assert outcome.process == Process(target, items)
    assert outcome.detail == 'head-constant'


def test_cc_then_continuation_restores():
    # the continuation is invoked with h1 as soon as it is captured
    p = Process(CC, stack(parse_term('C I h1'), HConst(2)))
    outcome = run_linear(p, fuel=100)
    assert outcome.process == Process(HConst(1), stack(HConst(2)))


@pytest.mark.parametrize(
    ('text', 'cfg', 'expected'),
    (
        ('p', OracleConfig(), 'accept(stop) in 1 step'),
        ('delta n:3', COLLECT, 'accept(oracle 3) in 2 steps'),
        ('K I W', OracleConfig(), 'stuck(arity) in 3 steps'),
        ('gamma p p p', OracleConfig(), 'fork in 3 steps'),
        ('W W W', OracleConfig(), 'fuel in 50 steps'),
    ),
)
def test_run_linear(text, cfg, expected):
    outcome = run_linear(Process(parse_term(text), PI0), fuel=50, cfg=cfg)
    assert str(outcome) == expected


def test_run_outcome_observable():
    accepted = RunOutcome('accept', 2, Process(K, PI0), 'oracle', 3)
    assert accepted.observable == ('accept', 3)
    assert RunOutcome('stuck', 0, Process(K, PI0), 'arity').observable == (
        'stuck', 'arity',
    )


def test_trace():
    lines, outcome = trace(Process(parse_term('(K) I W'), PI0), fuel=10)
    assert lines == [
        TraceLine(1, Process(App(K, I), stack(W)), 7),
        TraceLine(2, Process(K, stack(I, W)), 7),
        TraceLine(3, Process(I, PI0), 9),
    ]
    assert format_trace(lines) == (
        '#1 K I ⋆ W · π0  [rule 7]\n'
        '#2 K ⋆ I · W · π0  [rule 7]\n'
        '#3 I ⋆ π0  [rule 9]'
    )
    assert outcome.kind == 'stuck'


def test_exec_tree_collects_every_branch():
    t = parse_term('gamma (delta n:5) (delta n:5) (delta n:7)')
    tree = exec_tree(Process(t, PI0), fuel=1000, cfg=COLLECT)
    assert tree.rule == 'fork'
    assert len(tree.trail) == 3
    calls = (App(DELTA, numeral(n)) for n in (5, 5, 7))
    assert tree.last == Process(GAMMA, stack(*calls))
    assert [leaf for _, leaf in tree.leaves()] == [
        Leaf('accept', 'oracle', 5),
        Leaf('accept', 'oracle', 5),
        Leaf('accept', 'oracle', 7),
    ]
    assert [path for path, _ in tree.leaves()] == [(0,), (1,), (2,)]
    assert tree.height() == 6

    data = exec_tree_to_json(tree)
    assert data['format'] == 1
    assert len(data['tree']['children']) == 3
    assert data['tree']['rule'] == 'fork'
    assert data['tree']['leaf'] is None
    children = data['tree']['children']
    assert [c['leaf']['payload'] for c in children] == [5, 5, 7]
    assert data['tree']['steps'][0] == {
        'rule': 7,
        'process': str(tree.trail[0].process),
    }


def test_exec_tree_out_of_fuel():
    tree = exec_tree(Process(parse_term('W W W'), PI0), fuel=10)
    assert tree.leaf == Leaf('fuel')
    assert len(tree.trail) == 10


@pytest.mark.parametrize(
    ('text', 'fuel', 'status'),
    (
        ('p', 10, 'yes'),
        ('K p h0', 10, 'yes'),
        ('gamma p p h0', 100, 'yes'),
        ('gamma p h0 (W W W)', 100, 'unknown'),
        ('gamma p h0 h0', 100, 'no-evidence'),
        ('gamma p (W W W) p', 100, 'yes'),
        ('W W W', 100, 'unknown'),
        ('h0', 100, 'no-evidence'),
        ('gamma (gamma p p h0) (gamma h0 h0 p) p', 100, 'yes'),
    ),
)
def test_in_pole(text, fuel, status):
    assert in_pole(Process(parse_term(text), PI0), fuel).status == status


def test_in_pole_prunes_decided_forks():
    verdict = in_pole(Process(parse_term('gamma p p (W W W)'), PI0), 1000)
    assert verdict.status == 'yes'
    assert [leaf.status for _, leaf in verdict.tree.leaves()] == [
        'accept', 'accept', 'pruned',
    ]


def test_in_pole_checker_ignores_a_diverging_branch():
    leaf = App(DELTA, numeral(5))
    t = App(App(App(GAMMA, leaf), leaf), App(App(W, W), W))
    cfg = OracleConfig(mode='checker', target=5)
    assert in_pole(Process(t, PI0), 10_000, cfg).status == 'yes'
    assert in_pole(Process(t, PI0), 10_000).status == 'no-evidence'


def test_scheduler_without_pruning_runs_on():
    p = Process(parse_term('gamma p p (W W W)'), PI0)
    schedule = Scheduler(prune=False).run(p, fuel=100)
    assert schedule.steps == 100
    assert [leaf.status for _, leaf in schedule.tree.leaves()] == [
        'accept', 'accept', 'fuel',
    ]


def test_scheduler_records_trails_on_request():
    p = Process(parse_term('gamma (I p) (I p) h0'), PI0)
    quiet = Scheduler().run(p, fuel=100)
    recorded = Scheduler(record=True).run(p, fuel=100)
    assert [len(c.trail) for c in quiet.tree.children] == [0, 0, 0]
    assert [len(c.trail) for c in recorded.tree.children] == [2, 2, 0]
    assert quiet.result == recorded.result
    assert quiet.steps == recorded.steps
    assert recorded.tree.children[0].last == Process(STOP, PI0)


def test_exec_tree_of_a_long_chain_of_forks():
    # W I d ⋆ π0 forks into h0, h0 and W I d ⋆ π0 again after nine steps
    d = apply(B, apply(GAMMA, HConst(0), HConst(0)), App(W, I))
    start = Process(apply(W, I, d), PI0)
    tree = exec_tree(start, fuel=10 * 3000 + 1)
    leaves = tree.leaves()
    assert len(leaves) == 6001
    assert leaves[-1] == ((2,) * 3000, Leaf('fuel'))
    assert tree.height() == 10 * 3000 + 2

    node = tree.to_json()
    for _ in range(3000):
        assert node['node'] == str(start)
        assert len(node['steps']) == 9
        assert [c['leaf']['status'] for c in node['children'][:2]] == [
            'stuck', 'stuck',
        ]
        node = node['children'][2]
    assert node['leaf']['status'] == 'fuel'


@settings(max_examples=100, deadline=None)
@given(t=terms, fuel=st.integers(min_value=0, max_value=200))
def test_pole_membership_is_monotone_in_fuel(t, fuel):
    p = Process(t, PI0)
    if in_pole(p, fuel).status == 'yes':
        assert in_pole(p, fuel + 100).status == 'yes'


@settings(max_examples=50, deadline=None)
@given(theta=proof_like_terms)
def test_proof_like_terms_never_accept(theta):
    verdict = in_pole(Process(theta, PI0), fuel=10_000)
    assert verdict.status != 'yes'


@pytest.mark.parametrize('n', range(101))
def test_numeral_roundtrip(n):
    assert decode_numeral(numeral(n), fuel=50 * n + 50) == n
