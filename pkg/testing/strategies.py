from __future__ import annotations

from hypothesis import strategies as st

from realizer.compiler import Const
from realizer.compiler import Lam
from realizer.compiler import LambdaTerm
from realizer.compiler import LApp
from realizer.compiler import Var
from realizer.forcing import Atom
from realizer.forcing import Imp
from realizer.forcing import PropStructure
from realizer.syntax import App
from realizer.syntax import DELTA
from realizer.syntax import GAMMA
from realizer.syntax import HConst
from realizer.syntax import Instr
from realizer.syntax import numeral
from realizer.syntax import Stack
from realizer.syntax import STOP
from realizer.syntax import Term
from realizer.syntax import W

PROOF_LIKE_INSTRUCTIONS = (
    'B', 'C', 'I', 'K', 'W', 'cc', 'gamma', 'kappa', 'e', 'chi', "chi'",
)

proof_like_atoms = st.one_of(
    st.sampled_from([Instr(name) for name in PROOF_LIKE_INSTRUCTIONS]),
    st.integers(min_value=0, max_value=3).map(numeral),
)
atoms = st.one_of(
    proof_like_atoms,
    st.sampled_from([Instr('a'), STOP, DELTA]),
    st.integers(min_value=0, max_value=3).map(HConst),
)


def _apps(children: st.SearchStrategy[Term]) -> st.SearchStrategy[Term]:
    return st.builds(App, children, children)


terms = st.recursive(atoms, _apps, max_leaves=8)
proof_like_terms = st.recursive(proof_like_atoms, _apps, max_leaves=8)
small_terms = st.recursive(atoms, _apps, max_leaves=3)


def stacks(
        items: st.SearchStrategy[Term] = small_terms,
        max_size: int = 4,
) -> st.SearchStrategy[Stack]:
    return st.lists(items, max_size=max_size).map(
        lambda xs: Stack(tuple(xs)),
    )


# stack items the compiled and the reference machine treat alike
instruction_stacks = stacks(
    st.sampled_from([STOP, Instr('K'), Instr('I'), DELTA, numeral(2)]),
    max_size=3,
)


_LAMBDA_CONSTANTS = (
    Const(STOP),
    Const(Instr('I')),
    Const(Instr('K')),
    Const(numeral(0)),
    Const(numeral(1)),
)


@st.composite
def closed_lambdas(draw: st.DrawFn, max_depth: int = 5) -> LambdaTerm:
    """closed λ-terms over a few constants"""

    def go(scope: tuple[str, ...], depth: int) -> LambdaTerm:
        kinds = ['const']
        if scope:
            kinds.append('var')
        if depth > 0:
            kinds.extend(('lam', 'app', 'app'))
        match draw(st.sampled_from(kinds)):
            case 'const':
                return draw(st.sampled_from(_LAMBDA_CONSTANTS))
            case 'var':
                return Var(draw(st.sampled_from(scope)))
            case 'lam':
                name = f'v{len(scope)}'
                return Lam(name, go((*scope, name), depth - 1))
            case _:
                return LApp(go(scope, depth - 1), go(scope, depth - 1))

    return go((), max_depth)


# adversaries of the planted value: a stuck branch or a diverging one
STUCK = HConst(0)
DIVERGING = App(App(W, W), W)


@st.composite
def fork_instances(
        draw: st.DrawFn,
        max_depth: int = 5,
) -> tuple[Term, int]:
    """A tree of forks over oracle calls in which at most one branch of
    every fork misbehaves, together with the value every fork certifies.
    """
    planted = draw(st.integers(min_value=0, max_value=9))

    def leaf(n: int) -> Term:
        return App(DELTA, numeral(n))

    def go(depth: int) -> Term:
        if depth == 0 or draw(st.booleans()):
            return leaf(planted)
        children = [go(depth - 1), go(depth - 1)]
        adversary: Term
        match draw(st.sampled_from(['stuck', 'diverging', 'wrong', 'tree'])):
            case 'stuck':
                adversary = STUCK
            case 'diverging':
                adversary = DIVERGING
            case 'wrong':
                adversary = leaf(draw(st.integers(min_value=0, max_value=9)))
            case _:
                adversary = go(depth - 1)
        children.insert(draw(st.integers(min_value=0, max_value=2)), adversary)
        return App(App(App(GAMMA, children[0]), children[1]), children[2])

    return go(max_depth), planted


cohen_conditions = st.frozensets(
    st.tuples(
        st.integers(min_value=0, max_value=3),
        st.integers(min_value=0, max_value=1),
    ),
    max_size=3,
)


@st.composite
def prop_structures(draw: st.DrawFn, max_depth: int = 5) -> PropStructure:
    """implication skeletons over the atoms ``O_∈`` and ``O_⊂``"""

    def go(depth: int) -> PropStructure:
        if depth == 0 or draw(st.booleans()):
            return draw(st.sampled_from([Atom('in'), Atom('sub')]))
        return Imp(go(depth - 1), go(depth - 1))

    return go(max_depth)
