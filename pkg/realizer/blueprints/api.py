from typing import Any

from flask import abort
from flask import Blueprint
from flask import current_app
from flask import request

from realizer.cache import cache
from realizer.compiler import abstract_eliminate
from realizer.compiler import parse_lambda
from realizer.extract import extract_witness
from realizer.forcing import check_closure_laws
from realizer.forcing import condition_system
from realizer.machine import OracleConfig
from realizer.machine import run_linear
from realizer.syntax import parse_stack
from realizer.syntax import Process
from realizer.syntax import Term

api = Blueprint(name='api', import_name=__name__)


def _fuel() -> int:
    """The ``fuel`` query argument, at most ``REALIZER_MAX_FUEL``"""
    fuel = request.args.get(
        'fuel',
        default=current_app.config['REALIZER_FUEL'],
        type=int,
    )
    max_fuel = current_app.config['REALIZER_MAX_FUEL']
    if fuel is None or not 0 <= fuel <= max_fuel:
        abort(400)
    return fuel


def _compile(text: str | None, eta: bool = True) -> Term:
    if text is None:
        abort(400)
    try:
        return abstract_eliminate(parse_lambda(text), eta=eta)
    except ValueError:
        abort(400)


@api.route('/compile')
@cache.cached(query_string=True)
def compile_term() -> dict[str, Any]:
    """Translate the λ-term ``term`` into a combinator term. ``eta=0``
    switches the η-rule off.
    """
    eta = request.args.get('eta', default='1') != '0'
    t = _compile(request.args.get('term'), eta=eta)
    return {'format': 1, 'term': str(t)}


@api.route('/run')
@cache.cached(query_string=True)
def run() -> dict[str, Any]:
    """Run ``term`` against ``stack`` with the oracle mode ``oracle``."""
    t = _compile(request.args.get('term'))
    try:
        pi = parse_stack(request.args.get('stack', default=''))
        cfg = OracleConfig.parse(request.args.get('oracle', default='none'))
    except ValueError:
        abort(400)
    outcome = run_linear(Process(t, pi), _fuel(), cfg)
    return {
        'format': 1,
        'kind': outcome.kind,
        'detail': outcome.detail,
        'payload': outcome.payload,
        'steps': outcome.steps,
        'process': str(outcome.process),
    }


@api.route('/extract')
@cache.cached(query_string=True)
def extract() -> dict[str, Any]:
    """Extract the witness computed by the realizer ``term``."""
    t = _compile(request.args.get('term'))
    return extract_witness(t, fuel=_fuel()).to_json()


@api.route('/demo/<name>')
@cache.cached(query_string=True)
def demo(name: str) -> dict[str, Any]:
    """Extract the witness of a shipped demo.

    :param name: the name of the demo without ``.lc``
    """
    from realizer.cli import demo_text

    try:
        source = demo_text(name)
    except FileNotFoundError:
        abort(404)
    report = extract_witness(_compile(source), fuel=_fuel())
    return {'demo': name, **report.to_json()}


@api.route('/laws')
@cache.cached(query_string=True)
def laws() -> dict[str, Any]:
    """Check the closure laws of the forcing extension over the condition
    system ``system`` with at most ``REALIZER_TRIALS`` samples per law.
    """
    max_trials = current_app.config['REALIZER_TRIALS']
    trials = request.args.get('trials', default=max_trials, type=int)
    seed = request.args.get('seed', default=0, type=int)
    if trials is None or seed is None or not 0 <= trials <= max_trials:
        abort(400)
    try:
        cs = condition_system(request.args.get('system', default='cohen'))
    except ValueError:
        abort(400)
    return check_closure_laws(cs, trials=trials, seed=seed).to_json()
