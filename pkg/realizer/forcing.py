from __future__ import annotations

import json
import logging
import os
from collections.abc import Callable
from collections.abc import Hashable
from collections.abc import Iterable
from collections.abc import Iterator
from collections.abc import Mapping
from dataclasses import dataclass
from importlib import resources
from typing import Any
from typing import Literal
from typing import NamedTuple

import networkx as nx
import numpy as np

from realizer.compiler import abstract_eliminate
from realizer.compiler import Const
from realizer.compiler import Lam
from realizer.compiler import lam
from realizer.compiler import LambdaTerm
from realizer.compiler import LApp
from realizer.compiler import lapply
from realizer.compiler import Var
from realizer.machine import in_pole
from realizer.machine import Next
from realizer.machine import NO_ORACLE
from realizer.machine import OracleConfig
from realizer.machine import PoleVerdict
from realizer.machine import step
from realizer.syntax import App
from realizer.syntax import B
from realizer.syntax import CC
from realizer.syntax import Cert
from realizer.syntax import CHI
from realizer.syntax import CHI_PRIME
from realizer.syntax import FRAK_C
from realizer.syntax import I
from realizer.syntax import Instr
from realizer.syntax import is_proof_like
from realizer.syntax import k_term
from realizer.syntax import parse_term
from realizer.syntax import Process
from realizer.syntax import Stack
from realizer.syntax import Term

logger = logging.getLogger(__name__)

Condition = Hashable


def format_condition(condition: Condition) -> str:
    """Render a condition, Cohen conditions as sorted ``index:bit`` pairs."""
    if isinstance(condition, frozenset):
        pairs = ','.join(f'{i}:{bit}' for i, bit in sorted(condition))
        return f'{{{pairs}}}'
    return str(condition)


@dataclass(frozen=True, slots=True)
class CondSeq:
    """A finite sequence of forcing conditions. Sequences form a monoid
    under ``+`` with the empty sequence as unit.
    """
    conditions: tuple[Condition, ...] = ()

    @classmethod
    def unit(cls) -> CondSeq:
        return cls()

    def __add__(self, other: CondSeq) -> CondSeq:
        return CondSeq((*self.conditions, *other.conditions))

    def __iter__(self) -> Iterator[Condition]:
        return iter(self.conditions)

    def __len__(self) -> int:
        return len(self.conditions)

    def __str__(self) -> str:
        if not self.conditions:
            return '1'
        return ' '.join(format_condition(c) for c in self.conditions)


UNIT = CondSeq.unit()


def concat(*seqs: CondSeq) -> CondSeq:
    result = UNIT
    for seq in seqs:
        result = result + seq
    return result


class ConditionSystem:
    """Base class for a set of forcing conditions. :meth:`compatible` and
    :meth:`sample` need to be overridden.

    Compatibility of a sequence must not depend on the order of its
    elements or on repetitions, and the empty sequence is compatible.
    """
    name: str = ''

    def compatible(self, conditions: Iterable[Condition]) -> bool:
        """``True`` iff the conditions have a common lower bound"""
        raise NotImplementedError('compatibility needs to be implemented')

    def sample(self, rng: np.random.Generator) -> Condition:
        """Draw a random condition.

        :param rng: the random number generator to draw from
        """
        raise NotImplementedError('sampling needs to be implemented')

    def sample_seq(
            self,
            rng: np.random.Generator,
            max_len: int = 2,
    ) -> CondSeq:
        size = int(rng.integers(0, max_len + 1))
        return CondSeq(tuple(self.sample(rng) for _ in range(size)))


class Trivial(ConditionSystem):
    """A single condition, compatible with itself."""
    name = 'trivial'

    def compatible(self, conditions: Iterable[Condition]) -> bool:
        return True

    def sample(self, rng: np.random.Generator) -> Condition:
        return '1'


class Cohen(ConditionSystem):
    """Finite partial maps from the naturals to ``{0, 1}``, given as
    frozensets of ``(index, bit)`` pairs. A sequence is compatible iff the
    union of the maps is a map.

    :param indices: sampled conditions use indices below this bound
    :param max_size: sampled conditions have at most this many pairs
    """
    name = 'cohen'

    def __init__(self, indices: int = 4, max_size: int = 2) -> None:
        self.indices = indices
        self.max_size = max_size

    def compatible(self, conditions: Iterable[Condition]) -> bool:
        graph: dict[int, int] = {}
        for condition in conditions:
            assert isinstance(condition, frozenset)
            for index, bit in condition:
                if graph.setdefault(index, bit) != bit:
                    return False
        return True

    def sample(self, rng: np.random.Generator) -> Condition:
        size = int(rng.integers(0, self.max_size + 1))
        indices = rng.choice(self.indices, size=size, replace=False)
        bits = rng.integers(0, 2, size=size)
        return frozenset(
            (int(i), int(bit)) for i, bit in zip(indices, bits)
        )


class PosetSemilattice(ConditionSystem):
    """A finite inf-semilattice with a downward closed set of false
    conditions. A sequence is compatible iff its greatest lower bound is
    not false.

    :param elements: the conditions
    :param order: pairs ``(x, y)`` meaning ``x <= y``, closed reflexively
        and transitively
    :param top: the greatest condition
    :param false: the false conditions

    :raises ValueError: if ``top`` is not the greatest element, a pair has
        no greatest lower bound or ``false`` is not downward closed
    """

    def __init__(
            self,
            elements: Iterable[str],
            order: Iterable[tuple[str, str]],
            top: str,
            false: Iterable[str],
            name: str = 'poset',
    ) -> None:
        self.name = name
        self.elements = sorted(set(elements))
        self.top = top
        self.false = frozenset(false)
        graph = nx.DiGraph()
        graph.add_nodes_from(self.elements)
        graph.add_edges_from(order)
        closure = nx.transitive_closure(graph, reflexive=True)
        self._leq = frozenset(closure.edges)
        if set(graph.nodes) != set(self.elements):
            raise ValueError('the order mentions unknown elements')
        if any(not self.leq(x, top) for x in self.elements):
            raise ValueError(f'{top!r} is not the greatest element')
        for f in self.false:
            for x in self.elements:
                if self.leq(x, f) and x not in self.false:
                    raise ValueError(
                        'the false conditions are not downward closed',
                    )
        self._glb = {
            (a, b): self._compute_glb(a, b)
            for a in self.elements
            for b in self.elements
        }

    def leq(self, x: str, y: str) -> bool:
        return (x, y) in self._leq

    def _compute_glb(self, a: str, b: str) -> str:
        lower = [x for x in self.elements if self.leq(x, a) and self.leq(x, b)]
        for x in lower:
            if all(self.leq(y, x) for y in lower):
                return x
        raise ValueError(f'{a!r} and {b!r} have no greatest lower bound')

    def glb(self, conditions: Iterable[Condition]) -> str:
        result = self.top
        for c in conditions:
            assert isinstance(c, str)
            result = self._glb[result, c]
        return result

    def compatible(self, conditions: Iterable[Condition]) -> bool:
        return self.glb(conditions) not in self.false

    def sample(self, rng: np.random.Generator) -> Condition:
        return self.elements[int(rng.integers(len(self.elements)))]

    @classmethod
    def from_json(cls, path: str) -> PosetSemilattice:
        """Read ``{"top": ..., "elements": [...], "order": [[x, y], ...],
        "false": [...]}`` from ``path``.
        """
        with open(path) as f:
            data = json.load(f)
        try:
            return cls(
                elements=data['elements'],
                order=[tuple(pair) for pair in data['order']],
                top=data['top'],
                false=data['false'],
                name=f'poset:{os.path.basename(path)}',
            )
        except KeyError as e:
            raise ValueError(f'poset file {path!r} lacks {e}') from e


def condition_system(name: str) -> ConditionSystem:
    """Look up a condition system by name: ``trivial``, ``cohen`` or
    ``poset:<file>``. A poset file that does not exist is looked up among
    the shipped demos, so ``poset:diamond`` works too.

    :raises ValueError: for unknown names and malformed poset files
    """
    if name == 'trivial':
        return Trivial()
    elif name == 'cohen':
        return Cohen()
    elif name.startswith('poset:'):
        path = name.removeprefix('poset:')
        if not os.path.exists(path):
            stem = os.path.basename(path).removesuffix('.json')
            demo = resources.files('realizer') / 'demos' / f'{stem}.json'
            if not demo.is_file():
                raise ValueError(f'no such poset file: {path!r}')
            with resources.as_file(demo) as found:
                return PosetSemilattice.from_json(str(found))
        return PosetSemilattice.from_json(path)
    else:
        raise ValueError(f'unknown condition system: {name!r}')


class CertificateError(ValueError):
    pass


def cert_normalize(t: Term) -> CondSeq:
    """The payload of a certificate, looking through any number of
    ``frak-c`` applications.

    :raises CertificateError: if ``t`` has any other shape
    """
    while isinstance(t, App) and t.fun == FRAK_C:
        t = t.arg
    if isinstance(t, Cert):
        return t.payload
    raise CertificateError('not-a-certificate')


def cert_valid(t: Term, u: CondSeq, cs: ConditionSystem) -> bool:
    """``True`` iff ``t`` certifies ``u``: its payload is compatible and
    contains every condition of ``u``.
    """
    try:
        s = cert_normalize(t)
    except CertificateError:
        return False
    return cs.compatible(s) and set(u) <= set(s)


class PairTerm(NamedTuple):
    term: Term
    cond: CondSeq


class PairStack(NamedTuple):
    stack: Stack
    cond: CondSeq


class PairProcess(NamedTuple):
    base: Process
    cond: CondSeq

    def __str__(self) -> str:
        return f'({self.base}, {self.cond})'


def pair_push(top: PairTerm, rest: PairStack) -> PairStack:
    """``(ξ,u)·(π,v) = (ξ·π, uv)``"""
    return PairStack(rest.stack.push(top.term), top.cond + rest.cond)


def pair_apply(fun: PairTerm, arg: PairTerm) -> PairTerm:
    """``(ξ,u)(η,v) = (ξη, uv)``"""
    return PairTerm(App(fun.term, arg.term), fun.cond + arg.cond)


def pair_process(head: PairTerm, rest: PairStack) -> PairProcess:
    """``(ξ,u)⋆(π,v) = (ξ⋆π, uv)``"""
    return PairProcess(Process(head.term, rest.stack), head.cond + rest.cond)


def pair_stack(*items: PairTerm, rest: PairStack) -> PairStack:
    for item in reversed(items):
        rest = pair_push(item, rest)
    return rest


def pole1(
        pp: PairProcess,
        fuel: int,
        cs: ConditionSystem,
        cfg: OracleConfig = NO_ORACLE,
) -> PoleVerdict:
    """Membership in the pole of the extension: every certificate of the
    condition sequence put at the end of the stack must lead into the base
    pole. Incompatible sequences have no certificate, so they are in the
    pole vacuously. Otherwise the canonical certificate ``Cert(u)`` is
    checked.
    """
    if not cs.compatible(pp.cond):
        return PoleVerdict('yes', None, 0)
    process = Process(pp.base.head, pp.base.stack.push_back(Cert(pp.cond)))
    return in_pole(process, fuel, cfg._replace(normalize_certs=True))


# star combinators

def _marked(t: str) -> LambdaTerm:
    """``(χ′)(𝔠)t``"""
    return LApp(Const(CHI_PRIME), LApp(Const(FRAK_C), Var(t)))


def _read_back(t: str, body: LambdaTerm) -> LambdaTerm:
    """``(χ)λt body``"""
    return LApp(Const(CHI), Lam(t, body))


def _star(names: str, body: LambdaTerm) -> Term:
    return abstract_eliminate(lam(names, body), eta=True)


_X, _Y, _Z = Var('x'), Var('y'), Var('z')

CSTAR = _star('x y z', _read_back('t', lapply(_marked('t'), _X, _Z, _Y)))
KSTAR = _star('x y', _read_back('t', lapply(_marked('t'), _X)))
WSTAR = _star('x y', _read_back('t', lapply(_marked('t'), _X, _Y, _Y)))
CCSTAR = _star(
    'x',
    _read_back(
        't',
        LApp(
            Const(CC),
            Lam(
                'k',
                lapply(
                    _marked('t'),
                    _X,
                    Lam(
                        "x'",
                        _read_back(
                            "t'",
                            LApp(Var('k'), lapply(_marked("t'"), Var("x'"))),
                        ),
                    ),
                ),
            ),
        ),
    ),
)


def kstar(pi: Stack) -> Term:
    """The continuation of the extension restoring ``pi`` and marking the
    certificate at its end.
    """
    return _star(
        'x',
        _read_back('t', LApp(Const(k_term(pi)), lapply(_marked('t'), _X))),
    )


def star_combinators() -> dict[str, Term | Callable[[Stack], Term]]:
    return {
        'Bstar': B,
        'Cstar': CSTAR,
        'Istar': I,
        'Kstar': KSTAR,
        'Wstar': WSTAR,
        'ccstar': CCSTAR,
        'kstar': kstar,
    }


class NotProofLikeError(ValueError):
    pass


_LIFTED = {'C': CSTAR, 'K': KSTAR, 'W': WSTAR, 'cc': CCSTAR}


def _lift(t: Term) -> Term:
    match t:
        case Instr(name) if name in _LIFTED:
            return _LIFTED[name]
        case App(fun, arg):
            return App(_lift(fun), _lift(arg))
        case _:
            return t


def lift_proof_like(theta: Term) -> PairTerm:
    """``(θ*, 𝟙)`` where ``θ*`` replaces ``C``, ``K``, ``W`` and ``cc`` by
    their starred versions.

    :raises NotProofLikeError: if ``theta`` is not proof-like
    """
    if not is_proof_like(theta):
        raise NotProofLikeError(f'not a proof-like term: {theta}')
    return PairTerm(_lift(theta), UNIT)


# terms and stacks the law checks draw from
POOL = tuple(
    parse_term(text) for text in (
        'I', 'K', 'p', 'K p', 'I p', 'C K p p', 'chi p', "chi' p",
        'gamma p p I', 'gamma I p p', 'h0', 'cc p', 'cc I', 'kappa (K p)',
        'W K', 'B p I', 'a p', 'chi (K p)', 'W W W',
    )
)


def _draw(rng: np.random.Generator) -> Term:
    return POOL[int(rng.integers(len(POOL)))]


def _draw_stack(rng: np.random.Generator, max_len: int = 3) -> Stack:
    size = int(rng.integers(0, max_len + 1))
    return Stack(tuple(_draw(rng) for _ in range(size)))


def _reaches(
        start: Process,
        goal: Callable[[Process], bool],
        fuel: int,
) -> Process | None:
    p = start
    for _ in range(fuel):
        if goal(p):
            return p
        result = step(p, NO_ORACLE)
        if not isinstance(result, Next):
            return None
        p = result.process
    return p if goal(p) else None


STAR_LAWS = ('Cstar', 'Kstar', 'Wstar', 'kstar', 'ccstar')


class StarReport(NamedTuple):
    law: str
    trials: int
    matched: int
    seed: int
    failures: tuple[str, ...]

    def to_json(self) -> dict[str, Any]:
        return {'format': 1, **self._asdict(), 'failures': list(self.failures)}

    def __str__(self) -> str:
        return f'{self.law} {self.matched}/{self.trials} reductions match'


def _star_case(
        law: str,
        rng: np.random.Generator,
        fuel: int,
) -> tuple[bool, str]:
    xi, eta, zeta = _draw(rng), _draw(rng), _draw(rng)
    pi = _draw_stack(rng)
    tau = Cert(Cohen().sample_seq(rng))
    marked = App(FRAK_C, tau)
    if law == 'Cstar':
        start = Process(CSTAR, Stack((xi, eta, zeta, *pi, tau)))
        want = Process(xi, Stack((zeta, eta, *pi, marked)))
    elif law == 'Kstar':
        start = Process(KSTAR, Stack((xi, eta, *pi, tau)))
        want = Process(xi, Stack((*pi, marked)))
    elif law == 'Wstar':
        start = Process(WSTAR, Stack((xi, eta, *pi, tau)))
        want = Process(xi, Stack((eta, eta, *pi, marked)))
    elif law == 'kstar':
        varpi = _draw_stack(rng)
        start = Process(kstar(pi), Stack((xi, *varpi, tau)))
        want = Process(xi, Stack((*pi, marked)))
    elif law == 'ccstar':
        start = Process(CCSTAR, Stack((xi, *pi, tau)))
        expected_rest = (*pi, marked)
        reached = _reaches(
            start,
            lambda p: p.head == xi and p.stack.items[1:] == expected_rest,
            fuel,
        )
        if reached is None:
            return False, f'{start} never reaches {xi} ⋆ k·{pi}'
        # the saved continuation must behave like kstar(pi)
        cont = reached.stack.items[0]
        arg, varpi = _draw(rng), _draw_stack(rng)
        tau2 = Cert(Cohen().sample_seq(rng))
        restored = Process(arg, Stack((*pi, App(FRAK_C, tau2))))
        ok = _reaches(
            Process(cont, Stack((arg, *varpi, tau2))),
            lambda p: p == restored,
            fuel,
        ) is not None
        return ok, '' if ok else f'{cont} does not restore {pi}'
    else:
        raise ValueError(f'unknown star law: {law!r}')
    ok = _reaches(start, lambda p: p == want, fuel) is not None
    return ok, '' if ok else f'{start} never reaches {want}'


def verify_star_law(
        law: str,
        trials: int = 500,
        seed: int = 0,
        fuel: int = 1000,
) -> StarReport:
    """Run a starred combinator on random stacks with a certificate at the
    end and check it reaches the expected process with the certificate
    marked by ``frak-c``.

    :param law: one of ``Cstar``, ``Kstar``, ``Wstar``, ``kstar`` and
        ``ccstar``
    :param trials: the number of random cases
    :param seed: the seed of the random number generator
    :param fuel: the step budget of a single case
    """
    if law not in STAR_LAWS:
        raise ValueError(f'unknown star law: {law!r}')
    rng = np.random.default_rng(seed)
    matched = 0
    failures = []
    for _ in range(trials):
        ok, why = _star_case(law, rng, fuel)
        if ok:
            matched += 1
        else:
            failures.append(why)
    if failures:
        logger.warning('%s: %d reductions failed', law, len(failures))
    return StarReport(law, trials, matched, seed, tuple(failures))


# closure laws

class _Sample(NamedTuple):
    xi: PairTerm
    eta: PairTerm
    zeta: PairTerm
    pi: PairStack
    varpi: PairStack


def _law_application(s: _Sample) -> tuple[PairProcess, PairProcess]:
    return (
        pair_process(s.xi, pair_push(s.eta, s.pi)),
        pair_process(pair_apply(s.xi, s.eta), s.pi),
    )


def _law_b(s: _Sample) -> tuple[PairProcess, PairProcess]:
    return (
        pair_process(s.xi, pair_push(pair_apply(s.eta, s.zeta), s.pi)),
        pair_process(
            PairTerm(B, UNIT),
            pair_stack(s.xi, s.eta, s.zeta, rest=s.pi),
        ),
    )


def _law_cstar(s: _Sample) -> tuple[PairProcess, PairProcess]:
    return (
        pair_process(s.xi, pair_stack(s.zeta, s.eta, rest=s.pi)),
        pair_process(
            PairTerm(CSTAR, UNIT),
            pair_stack(s.xi, s.eta, s.zeta, rest=s.pi),
        ),
    )


def _law_i(s: _Sample) -> tuple[PairProcess, PairProcess]:
    return (
        pair_process(s.xi, s.pi),
        pair_process(PairTerm(I, UNIT), pair_stack(s.xi, rest=s.pi)),
    )


def _law_kstar(s: _Sample) -> tuple[PairProcess, PairProcess]:
    return (
        pair_process(s.xi, s.pi),
        pair_process(
            PairTerm(KSTAR, UNIT),
            pair_stack(s.xi, s.eta, rest=s.pi),
        ),
    )


def _law_wstar(s: _Sample) -> tuple[PairProcess, PairProcess]:
    return (
        pair_process(s.xi, pair_stack(s.eta, s.eta, rest=s.pi)),
        pair_process(
            PairTerm(WSTAR, UNIT),
            pair_stack(s.xi, s.eta, rest=s.pi),
        ),
    )


def _law_kstar_pi(s: _Sample) -> tuple[PairProcess, PairProcess]:
    # (ξ,v)⋆(π,u) gives (k*_π,u)⋆(ξ,v)·(ϖ,w)
    k = PairTerm(kstar(s.pi.stack), s.pi.cond)
    return (
        pair_process(s.xi, s.pi),
        pair_process(k, pair_stack(s.xi, rest=s.varpi)),
    )


def _law_ccstar(s: _Sample) -> tuple[PairProcess, PairProcess]:
    k = PairTerm(kstar(s.pi.stack), s.pi.cond)
    return (
        pair_process(s.xi, pair_stack(k, rest=s.pi)),
        pair_process(PairTerm(CCSTAR, UNIT), pair_stack(s.xi, rest=s.pi)),
    )


Law = Callable[[_Sample], tuple[PairProcess, PairProcess]]

CLOSURE_LAWS: dict[str, Law] = {
    'application': _law_application,
    'B': _law_b,
    'Cstar': _law_cstar,
    'I': _law_i,
    'Kstar': _law_kstar,
    'Wstar': _law_wstar,
    'kstar': _law_kstar_pi,
    'ccstar': _law_ccstar,
}


class Violation(NamedTuple):
    premise: str
    conclusion: str
    verdict: str


class LawReport(NamedTuple):
    law: str
    samples: int
    premises_certified: int
    conclusions_certified: int
    violations: tuple[Violation, ...]


class ClosureReport(NamedTuple):
    system: str
    seed: int
    trials: int
    fuel: int
    laws: tuple[LawReport, ...]

    @property
    def violations(self) -> int:
        return sum(len(law.violations) for law in self.laws)

    def to_json(self) -> dict[str, Any]:
        return {
            'format': 1,
            'system': self.system,
            'seed': self.seed,
            'trials': self.trials,
            'fuel': self.fuel,
            'violations': self.violations,
            'laws': [
                {
                    'law': law.law,
                    'samples': law.samples,
                    'premises_certified': law.premises_certified,
                    'conclusions_certified': law.conclusions_certified,
                    'violations': [v._asdict() for v in law.violations],
                }
                for law in self.laws
            ],
        }

    def __str__(self) -> str:
        lines = [
            f'{law.law:<12} samples={law.samples} '
            f'certified={law.premises_certified} '
            f'violations={len(law.violations)}'
            for law in self.laws
        ]
        lines.append(f'{self.system}: {self.violations} violations')
        return '\n'.join(lines)


def _sample(cs: ConditionSystem, rng: np.random.Generator) -> _Sample:
    def pair_term() -> PairTerm:
        return PairTerm(_draw(rng), cs.sample_seq(rng))

    def stack() -> PairStack:
        return PairStack(_draw_stack(rng), cs.sample_seq(rng))

    return _Sample(pair_term(), pair_term(), pair_term(), stack(), stack())


def check_closure_laws(
        cs: ConditionSystem,
        trials: int = 100,
        fuel: int = 2000,
        seed: int = 0,
        laws: Iterable[str] = tuple(CLOSURE_LAWS),
) -> ClosureReport:
    """Check the laws making the extension a realizability algebra on
    random instances: whenever the premise is in the pole within ``fuel``,
    the conclusion has to be in the pole within ``4 * fuel + 1000``.

    :param cs: the condition system
    :param trials: the number of samples per law
    :param fuel: the step budget for the premise
    :param seed: the seed of the random number generator
    :param laws: the names of the laws to check
    """
    rng = np.random.default_rng(seed)
    reports = []
    for name in laws:
        law = CLOSURE_LAWS[name]
        certified = concluded = 0
        violations = []
        for _ in range(trials):
            premise, conclusion = law(_sample(cs, rng))
            if pole1(premise, fuel, cs).status != 'yes':
                continue
            certified += 1
            verdict = pole1(conclusion, 4 * fuel + 1000, cs)
            if verdict.status == 'yes':
                concluded += 1
            else:
                violations.append(
                    Violation(str(premise), str(conclusion), verdict.status),
                )
        if violations:
            logger.warning(
                '%s law violated %d times on %s', name, len(violations),
                cs.name,
            )
        reports.append(
            LawReport(name, trials, certified, concluded, tuple(violations)),
        )
    return ClosureReport(cs.name, seed, trials, fuel, tuple(reports))


# propositional structures

@dataclass(frozen=True, slots=True)
class Atom:
    kind: Literal['in', 'sub']

    def __str__(self) -> str:
        return 'O_∈' if self.kind == 'in' else 'O_⊂'


@dataclass(frozen=True, slots=True)
class Imp:
    left: PropStructure
    right: PropStructure

    def __str__(self) -> str:
        left = str(self.left)
        if isinstance(self.left, Imp):
            left = f'({left})'
        return f'{left}→{self.right}'


PropStructure = Atom | Imp


def prop_depth(ps: PropStructure) -> int:
    if isinstance(ps, Atom):
        return 0
    return 1 + max(prop_depth(ps.left), prop_depth(ps.right))


_ATOMS = {'O_∈': 'in', 'O_in': 'in', 'O_⊂': 'sub', 'O_sub': 'sub'}


def _prop_tokens(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        for lit in ('->', '→', '(', ')', *_ATOMS):
            if text.startswith(lit, pos):
                tokens.append('→' if lit == '->' else lit)
                pos += len(lit)
                break
        else:
            raise ValueError(f'unexpected {text[pos]!r} at position {pos}')
    return tokens


def parse_prop(text: str) -> PropStructure:
    """Parse an implication skeleton such as ``((O_∈→O_∈)→O_∈)→O_∈``.
    Implication associates to the right.

    :raises ValueError: on malformed input
    """
    tokens = _prop_tokens(text)
    pos = 0

    def implication() -> PropStructure:
        nonlocal pos
        left = atom()
        if pos < len(tokens) and tokens[pos] == '→':
            pos += 1
            return Imp(left, implication())
        return left

    def atom() -> PropStructure:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError('unexpected end of proposition')
        token = tokens[pos]
        pos += 1
        if token == '(':
            inner = implication()
            if pos >= len(tokens) or tokens[pos] != ')':
                raise ValueError('missing )')
            pos += 1
            return inner
        if token in _ATOMS:
            return Atom('in' if _ATOMS[token] == 'in' else 'sub')
        raise ValueError(f'unexpected {token!r}')

    try:
        result = implication()
    except RecursionError:
        raise ValueError('proposition nested too deeply') from None
    if pos != len(tokens):
        raise ValueError(f'unexpected {tokens[pos]!r}')
    return result


def leaf_transformers(q: Term, q_prime: Term) -> tuple[Term, Term]:
    """``(λx (χ)(𝔮)x, λx (𝔮′)(χ′)x)``"""
    xv = Var('x')
    return (
        abstract_eliminate(
            Lam('x', LApp(Const(CHI), LApp(Const(q), xv))),
        ),
        abstract_eliminate(
            Lam('x', LApp(Const(q_prime), LApp(Const(CHI_PRIME), xv))),
        ),
    )


def node_transformers(
        left: tuple[Term, Term],
        right: tuple[Term, Term],
) -> tuple[Term, Term]:
    """For ``F = F′→F″``: ``χ_F = λxλy (χ_F″)(x)(χ′_F′)y`` and
    ``χ′_F = λxλy (χ′_F″)(x)(χ_F′)y``.
    """
    chi_left, chi_prime_left = left
    chi_right, chi_prime_right = right
    xv, yv = Var('x'), Var('y')
    return (
        abstract_eliminate(
            lam(
                'x y',
                LApp(
                    Const(chi_right),
                    LApp(xv, LApp(Const(chi_prime_left), yv)),
                ),
            ),
        ),
        abstract_eliminate(
            lam(
                'x y',
                LApp(
                    Const(chi_prime_right),
                    LApp(xv, LApp(Const(chi_left), yv)),
                ),
            ),
        ),
    )


def chi_transformers(
        ps: PropStructure,
        base: Mapping[str, tuple[Term, Term]],
) -> tuple[Term, Term]:
    """Build the pair ``(χ_F, χ′_F)`` transferring realizers along the
    propositional structure ``ps``.

    :param ps: the implication skeleton
    :param base: for ``in`` and ``sub``, the pair of terms standing for the
        realizers of the two atoms
    """
    match ps:
        case Atom(kind):
            return leaf_transformers(*base[kind])
        case Imp(left, right):
            return node_transformers(
                chi_transformers(left, base),
                chi_transformers(right, base),
            )
        case _:
            raise NotImplementedError(ps)
