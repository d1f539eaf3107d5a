from __future__ import annotations

import json
import logging
import os
from collections.abc import Callable
from importlib import resources
from typing import Any
from typing import TypeVar

import click
import sentry_sdk

from realizer.compiler import abstract_eliminate
from realizer.compiler import LambdaTerm
from realizer.compiler import parse_lambda
from realizer.compiler import ref_run
from realizer.compiler import RefOutcome
from realizer.extract import extract_witness
from realizer.extract import ExtractReport
from realizer.forcing import chi_transformers
from realizer.forcing import check_closure_laws
from realizer.forcing import CLOSURE_LAWS
from realizer.forcing import condition_system
from realizer.forcing import parse_prop
from realizer.forcing import STAR_LAWS
from realizer.forcing import verify_star_law
from realizer.machine import exec_tree
from realizer.machine import exec_tree_to_json
from realizer.machine import ExecTree
from realizer.machine import OracleConfig
from realizer.machine import run_linear
from realizer.machine import RunOutcome
from realizer.syntax import HConst
from realizer.syntax import ParseError
from realizer.syntax import parse_stack
from realizer.syntax import Process
from realizer.syntax import Stack
from realizer.syntax import Term

logger = logging.getLogger(__name__)

F = TypeVar('F', bound=Callable[..., Any])

EXIT_STUCK = 3
EXIT_AMBIGUOUS = 4
EXIT_FAIL = 5

DEMO_PREFIX = '@examples/'


class InputError(click.ClickException):
    """Bad input or configuration, the command exits with code 2."""
    exit_code = 2


def demo_names() -> list[str]:
    demos = resources.files('realizer') / 'demos'
    return sorted(
        p.name.removesuffix('.lc')
        for p in demos.iterdir()
        if p.name.endswith('.lc')
    )


def demo_text(name: str) -> str:
    """The source of a shipped demo, ``name`` with or without ``.lc``.

    :raises FileNotFoundError: if there is no such demo
    """
    name = name.removesuffix('.lc')
    source = resources.files('realizer') / 'demos' / f'{name}.lc'
    if not source.is_file():
        raise FileNotFoundError(f'no such demo: {name!r}')
    return source.read_text(encoding='utf-8')


def read_source(arg: str) -> str:
    """Inline source text, ``@path`` for a file or ``@examples/<name>`` for a
    shipped demo.
    """
    try:
        if arg.startswith(DEMO_PREFIX):
            return demo_text(arg.removeprefix(DEMO_PREFIX))
        elif arg.startswith('@'):
            with open(arg[1:], encoding='utf-8') as f:
                return f.read()
        else:
            return arg
    except OSError as e:
        raise InputError(str(e)) from e


def load_lambda(arg: str) -> LambdaTerm:
    try:
        return parse_lambda(read_source(arg))
    except ParseError as e:
        raise InputError(str(e)) from e


def load_term(arg: str, eta: bool) -> Term:
    try:
        return abstract_eliminate(load_lambda(arg), eta=eta)
    except ValueError as e:
        raise InputError(str(e)) from e


def load_stack(text: str) -> Stack:
    try:
        return parse_stack(read_source(text))
    except ParseError as e:
        raise InputError(str(e)) from e


def load_oracle(text: str) -> OracleConfig:
    try:
        return OracleConfig.parse(text)
    except ValueError as e:
        raise InputError(str(e)) from e


def emit(data: dict[str, Any]) -> None:
    click.echo(json.dumps(data, ensure_ascii=False, sort_keys=True))


def fuel_option(default: int) -> Callable[[F], F]:
    return click.option(
        '--fuel',
        default=default,
        show_default=True,
        type=click.IntRange(min=0),
        help='maximum number of machine steps',
    )


format_option = click.option(
    '--format',
    'fmt',
    default='text',
    show_default=True,
    type=click.Choice(['text', 'json']),
)
eta_option = click.option(
    '--no-eta',
    'eta',
    flag_value=False,
    default=True,
    help='compile without the η-rule',
)
stack_option = click.option(
    '--stack',
    default='',
    help='comma separated stack items, top first',
)
oracle_option = click.option(
    '--oracle',
    default='none',
    show_default=True,
    help='none, collect or check:N',
)
seed_option = click.option('--seed', default=0, show_default=True, type=int)


@click.group()
@click.option('-v', '--verbose', is_flag=True, help='log debug messages')
def main(verbose: bool) -> None:
    """Run terms of the classical realizability machine, extract witnesses
    and check the laws of the forcing extension.
    """
    sentry_sdk.init(
        dsn=os.environ.get('REALIZER_SENTRY_DSN'),
        traces_sample_rate=float(
            os.environ.get('REALIZER_SENTRY_SAMPLE_RATE', 0.0),
        ),
    )
    if verbose:
        logging.basicConfig(level=logging.DEBUG)


@main.command('compile')
@click.argument('source')
@eta_option
@format_option
def compile_cmd(source: str, eta: bool, fmt: str) -> None:
    """Translate a λ-term into a combinator term."""
    t = load_term(source, eta)
    if fmt == 'json':
        emit({'format': 1, 'term': str(t)})
    else:
        click.echo(str(t))


def _outcome_json(outcome: RunOutcome | RefOutcome) -> dict[str, Any]:
    data = {
        'format': 1,
        'kind': outcome.kind,
        'detail': outcome.detail,
        'payload': outcome.payload,
        'steps': outcome.steps,
    }
    if isinstance(outcome, RunOutcome):
        data['process'] = str(outcome.process)
    return data


def _ref_text(outcome: RefOutcome) -> str:
    if outcome.kind == 'accept' and outcome.detail == 'oracle':
        what = f'accept(oracle {outcome.payload})'
    elif outcome.detail is not None:
        what = f'{outcome.kind}({outcome.detail})'
    else:
        what = outcome.kind
    unit = 'step' if outcome.steps == 1 else 'steps'
    return f'{what} in {outcome.steps} {unit}'


@main.command('run')
@click.argument('source')
@stack_option
@fuel_option(100_000)
@oracle_option
@click.option(
    '--machine',
    default='combinator',
    show_default=True,
    type=click.Choice(['combinator', 'reference']),
)
@eta_option
@format_option
def run_cmd(
        source: str,
        stack: str,
        fuel: int,
        oracle: str,
        machine: str,
        eta: bool,
        fmt: str,
) -> None:
    """Run a term against a stack until it stops, gets stuck or forks."""
    cfg = load_oracle(oracle)
    pi = load_stack(stack)
    outcome: RunOutcome | RefOutcome
    if machine == 'reference':
        lterm = load_lambda(source)
        try:
            outcome = ref_run(
                lterm,
                tuple(pi),
                fuel=fuel,
                mode=cfg.mode,
                target=cfg.target,
                oracle=cfg.name,
            )
        except ValueError as e:
            raise InputError(str(e)) from e
        text = _ref_text(outcome)
    else:
        outcome = run_linear(Process(load_term(source, eta), pi), fuel, cfg)
        text = str(outcome)
    if fmt == 'json':
        emit(_outcome_json(outcome))
    else:
        click.echo(text)
    if outcome.kind == 'stuck' and outcome.steps == 0:
        raise SystemExit(EXIT_STUCK)


@main.command('trace')
@click.argument('source')
@stack_option
@fuel_option(1000)
@oracle_option
@eta_option
def trace_cmd(
        source: str,
        stack: str,
        fuel: int,
        oracle: str,
        eta: bool,
) -> None:
    """Print every step of a linear run, the outcome goes to stderr."""
    cfg = load_oracle(oracle)
    p = Process(load_term(source, eta), load_stack(stack))
    outcome = run_linear(
        p, fuel, cfg, on_step=lambda line: click.echo(str(line)),
    )
    click.echo(str(outcome), err=True)


def format_tree(tree: ExecTree) -> list[str]:
    lines: list[str] = []
    todo = [(tree, 0)]
    while todo:
        segment, indent = todo.pop()
        pad = '  ' * indent
        lines.append(f'{pad}{segment.node}  [{len(segment.trail)} steps]')
        if segment.leaf is not None:
            leaf = segment.leaf
            what: str = leaf.status
            if leaf.detail is not None:
                what = f'{what}({leaf.detail})'
            if leaf.payload is not None:
                what = f'{what} {leaf.payload}'
            lines.append(f'{pad}  -> {segment.last}  {what}')
        todo.extend((c, indent + 1) for c in reversed(segment.children))
    return lines


@main.command('tree')
@click.argument('source')
@stack_option
@fuel_option(10_000)
@oracle_option
@eta_option
@format_option
def tree_cmd(
        source: str,
        stack: str,
        fuel: int,
        oracle: str,
        eta: bool,
        fmt: str,
) -> None:
    """Expand the execution of a process including every fork."""
    cfg = load_oracle(oracle)
    p = Process(load_term(source, eta), load_stack(stack))
    tree = exec_tree(p, fuel, cfg)
    if fmt == 'json':
        emit(exec_tree_to_json(tree))
    else:
        click.echo('\n'.join(format_tree(tree)))


def _report(report: ExtractReport, fmt: str) -> None:
    if fmt == 'json':
        emit(report.to_json())
    else:
        click.echo(str(report.result))
        click.echo(
            f'{report.steps} steps, {len(report.branches)} branches',
            err=True,
        )
    if report.result.kind == 'ambiguous':
        raise SystemExit(EXIT_AMBIGUOUS)
    elif report.result.kind == 'fail':
        raise SystemExit(EXIT_FAIL)


@main.command('extract')
@click.argument('source')
@fuel_option(100_000)
@eta_option
@format_option
def extract_cmd(source: str, fuel: int, eta: bool, fmt: str) -> None:
    """Recover the integer computed by a realizer given the oracle."""
    _report(extract_witness(load_term(source, eta), fuel=fuel), fmt)


@main.command('demo')
@click.argument('name', required=False)
@fuel_option(100_000)
@format_option
def demo_cmd(name: str | None, fuel: int, fmt: str) -> None:
    """Extract the witness of a shipped demo, list the demos without
    NAME.
    """
    if name is None:
        for demo in demo_names():
            click.echo(demo)
        return
    t = load_term(f'{DEMO_PREFIX}{name}', eta=True)
    _report(extract_witness(t, fuel=fuel), fmt)


@main.group('forcing')
def forcing() -> None:
    """Checks of the forcing extension."""


@forcing.command('laws')
@click.option('--system', default='cohen', show_default=True)
@click.option('--trials', default=100, show_default=True, type=int)
@click.option(
    '--law',
    'laws',
    multiple=True,
    type=click.Choice(list(CLOSURE_LAWS)),
    help='check only these laws, all by default',
)
@seed_option
@fuel_option(2000)
@format_option
def laws_cmd(
        system: str,
        trials: int,
        laws: tuple[str, ...],
        seed: int,
        fuel: int,
        fmt: str,
) -> None:
    """Check the closure laws of the extension on random instances."""
    try:
        cs = condition_system(system)
    except ValueError as e:
        raise InputError(str(e)) from e
    report = check_closure_laws(
        cs,
        trials=trials,
        fuel=fuel,
        seed=seed,
        laws=laws or tuple(CLOSURE_LAWS),
    )
    if fmt == 'json':
        emit(report.to_json())
    else:
        click.echo(str(report))
    if report.violations:
        raise SystemExit(1)


@forcing.command('star')
@click.option(
    '--law',
    'laws',
    multiple=True,
    type=click.Choice(STAR_LAWS),
    help='check only these laws, all by default',
)
@click.option('--trials', default=500, show_default=True, type=int)
@seed_option
@fuel_option(1000)
@format_option
def star_cmd(
        laws: tuple[str, ...],
        trials: int,
        seed: int,
        fuel: int,
        fmt: str,
) -> None:
    """Verify the reductions of the starred combinators."""
    reports = [
        verify_star_law(law, trials=trials, seed=seed, fuel=fuel)
        for law in laws or STAR_LAWS
    ]
    if fmt == 'json':
        emit({'format': 1, 'laws': [r.to_json() for r in reports]})
    else:
        for report in reports:
            click.echo(str(report))
    if any(r.failures for r in reports):
        raise SystemExit(1)


@forcing.command('chi')
@click.argument('structure')
@format_option
def chi_cmd(structure: str, fmt: str) -> None:
    """Build the transformers of a propositional structure such as
    ``(O_in->O_in)->O_sub``. The atoms are realized by the opaque constants
    h0 and h1 for O_in, h2 and h3 for O_sub.
    """
    try:
        ps = parse_prop(structure)
    except ValueError as e:
        raise InputError(str(e)) from e
    base = {
        'in': (HConst(0), HConst(1)),
        'sub': (HConst(2), HConst(3)),
    }
    chi, chi_prime = chi_transformers(ps, base)
    if fmt == 'json':
        emit({
            'format': 1,
            'structure': str(ps),
            'chi': str(chi),
            'chi_prime': str(chi_prime),
        })
    else:
        click.echo(f'chi  = {chi}')
        click.echo(f"chi' = {chi_prime}")


if __name__ == '__main__':
    raise SystemExit(main())
