from __future__ import annotations

import logging
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from typing import NamedTuple

from realizer.syntax import App
from realizer.syntax import apply
from realizer.syntax import atom_from_token
from realizer.syntax import B
from realizer.syntax import C
from realizer.syntax import CC
from realizer.syntax import Cert
from realizer.syntax import GAMMA
from realizer.syntax import HConst
from realizer.syntax import I
from realizer.syntax import Instr
from realizer.syntax import K
from realizer.syntax import Oracle
from realizer.syntax import SUCC
from realizer.syntax import Term
from realizer.syntax import TokenStream
from realizer.syntax import W

logger = logging.getLogger(__name__)


class UnboundVariableError(ValueError):
    def __init__(self, name: str) -> None:
        super().__init__(f'unbound variable: {name!r}')
        self.name = name


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Lam:
    name: str
    body: LambdaTerm


@dataclass(frozen=True, slots=True)
class LApp:
    fun: LambdaTerm
    arg: LambdaTerm


@dataclass(frozen=True, slots=True)
class Const:
    term: Term


LambdaTerm = Var | Lam | LApp | Const


def lapply(head: LambdaTerm, *args: LambdaTerm) -> LambdaTerm:
    for arg in args:
        head = LApp(head, arg)
    return head


def lam(names: str, body: LambdaTerm) -> LambdaTerm:
    """``lam('x y', b)`` is ``\\x.\\y. b``"""
    for name in reversed(names.split()):
        body = Lam(name, body)
    return body


class _Frame(NamedTuple):
    """What was open around the λ-term being read.

    :param head: the partial application the term becomes an argument of
    :param scope: the bound names outside of the frame
    :param binders: the names of an abstraction, ``None`` for parentheses
    """
    head: LambdaTerm | None
    scope: frozenset[str]
    binders: tuple[str, ...] | None


def _parse_lterm(stream: TokenStream, scope: frozenset[str]) -> LambdaTerm:
    frames: list[_Frame] = []
    head: LambdaTerm | None = None
    while True:
        token = stream.peek()
        if token is None or token.kind in ('rparen', 'comma'):
            if head is None:
                raise stream.error('expected a λ-term', token)
            if not frames:
                return head
            frame = frames.pop()
            arg = head
            if frame.binders is None:
                stream.expect('rparen')
            else:
                for name in reversed(frame.binders):
                    arg = Lam(name, arg)
            head, scope = frame.head, frame.scope
        elif token.kind == 'lam':
            # an abstraction extends as far right as possible
            stream.next()
            names = [stream.expect('name').value]
            while (nxt := stream.peek()) is not None and nxt.kind == 'name':
                names.append(stream.next().value)
            stream.expect('dot')
            frames.append(_Frame(head, scope, tuple(names)))
            head, scope = None, scope | frozenset(names)
            continue
        else:
            stream.next()
            if token.kind == 'lparen':
                frames.append(_Frame(head, scope, None))
                head = None
                continue
            elif token.kind == 'name' and token.value in scope:
                arg = Var(token.value)
            elif token.kind in ('numeral', 'hconst'):
                arg = Const(atom_from_token(token, stream))
            elif token.kind == 'name':
                try:
                    arg = Const(atom_from_token(token, stream))
                except ValueError:
                    arg = Var(token.value)
            else:
                raise stream.error(f'unexpected {token.value!r}', token)
        head = arg if head is None else LApp(head, arg)


def parse_lambda(text: str) -> LambdaTerm:
    """Parse a λ-term over the instruction alphabet.

    Bound names shadow instruction names, any other unknown name is a
    free :class:`Var`.

    :param text: e.g. ``'\\x. (x) n:0'``

    :raises ParseError: with the position of the first offending token
    """
    stream = TokenStream(text)
    t = _parse_lterm(stream, frozenset())
    stream.finish()
    return t


def parse_lambda_list(text: str) -> list[LambdaTerm]:
    """Parse comma separated λ-terms, e.g. a stack given on the command
    line.
    """
    stream = TokenStream(text)
    if stream.peek() is None:
        return []
    items = [_parse_lterm(stream, frozenset())]
    while stream.peek() is not None:
        stream.expect('comma')
        items.append(_parse_lterm(stream, frozenset()))
    return items


# id of a node -> (node, its free names); holding the node keeps the id valid
FreeVarMemo = dict[int, tuple[LambdaTerm, frozenset[str]]]


def free_vars(
        t: LambdaTerm,
        memo: FreeVarMemo | None = None,
) -> frozenset[str]:
    """The free variables of ``t``, computed without recursion.

    :param t: the λ-term
    :param memo: results of earlier calls to reuse, filled in by this call
    """
    if memo is None:
        memo = {}
    todo = [t]
    while todo:
        node = todo[-1]
        if id(node) in memo:
            todo.pop()
            continue
        match node:
            case Var(name):
                names = frozenset((name,))
            case Const():
                names = frozenset()
            case Lam(name, body):
                if id(body) not in memo:
                    todo.append(body)
                    continue
                names = memo[id(body)][1] - {name}
            case LApp(fun, arg):
                missing = [c for c in (arg, fun) if id(c) not in memo]
                if missing:
                    todo.extend(missing)
                    continue
                names = memo[id(fun)][1] | memo[id(arg)][1]
            case _:
                raise NotImplementedError(node)
        todo.pop()
        memo[id(node)] = (node, names)
    return memo[id(t)][1]


def substitute(t: LambdaTerm, name: str, u: LambdaTerm) -> LambdaTerm:
    """``t[u/name]``. ``u`` must be closed, so no capture can happen."""
    if free_vars(u):
        raise ValueError('only closed terms can be substituted')
    done: dict[int, LambdaTerm] = {}
    todo = [t]
    while todo:
        node = todo[-1]
        match node:
            case Var(n) if n == name:
                result = u
            case Var() | Const():
                result = node
            case Lam(n, body) if n == name:
                result = node
            case Lam(n, body):
                if id(body) not in done:
                    todo.append(body)
                    continue
                result = Lam(n, done[id(body)])
            case LApp(fun, arg):
                missing = [c for c in (arg, fun) if id(c) not in done]
                if missing:
                    todo.extend(missing)
                    continue
                result = LApp(done[id(fun)], done[id(arg)])
            case _:
                raise NotImplementedError(node)
        todo.pop()
        done[id(node)] = result
    return done[id(t)]


# S̃ f g a reaches f ⋆ a·(g a)·π
S_TILDE = App(App(B, App(B, W)), App(App(B, B), C))


def _eliminate(
        x: str,
        body: LambdaTerm,
        eta: bool,
        memo: FreeVarMemo,
) -> LambdaTerm:
    """Remove the binder ``x`` from a body which has no binders left."""
    if x not in free_vars(body, memo):
        return LApp(Const(K), body)
    # only nodes mentioning x are visited
    done: dict[int, LambdaTerm] = {}
    todo = [body]
    while todo:
        node = todo[-1]
        match node:
            case Var():
                result: LambdaTerm = Const(I)
            case LApp(f, Var(name)) if (
                    eta and name == x and x not in free_vars(f, memo)
            ):
                result = f
            case LApp(f, g):
                in_f = x in free_vars(f, memo)
                in_g = x in free_vars(g, memo)
                missing = [
                    c for c, inside in ((g, in_g), (f, in_f))
                    if inside and id(c) not in done
                ]
                if missing:
                    todo.extend(missing)
                    continue
                if in_f and in_g:
                    result = lapply(Const(S_TILDE), done[id(f)], done[id(g)])
                elif in_f:
                    result = lapply(Const(C), done[id(f)], g)
                else:
                    result = lapply(Const(B), f, done[id(g)])
            case _:
                raise NotImplementedError(node)
        todo.pop()
        done[id(node)] = result
    return done[id(body)]


def _binder_free(t: LambdaTerm, eta: bool, memo: FreeVarMemo) -> LambdaTerm:
    done: dict[int, LambdaTerm] = {}
    todo = [t]
    while todo:
        node = todo[-1]
        match node:
            case Var() | Const():
                result: LambdaTerm = node
            case LApp(fun, arg):
                missing = [c for c in (arg, fun) if id(c) not in done]
                if missing:
                    todo.extend(missing)
                    continue
                result = LApp(done[id(fun)], done[id(arg)])
            case Lam(name, body):
                if id(body) not in done:
                    todo.append(body)
                    continue
                result = _eliminate(name, done[id(body)], eta, memo)
            case _:
                raise NotImplementedError(node)
        todo.pop()
        done[id(node)] = result
    return done[id(t)]


def _to_term(t: LambdaTerm) -> Term:
    done: dict[int, Term] = {}
    todo = [t]
    while todo:
        node = todo[-1]
        match node:
            case Const(term):
                done[id(node)] = term
                todo.pop()
            case LApp(fun, arg):
                if id(fun) not in done:
                    todo.append(fun)
                elif id(arg) not in done:
                    todo.append(arg)
                else:
                    done[id(node)] = App(done[id(fun)], done[id(arg)])
                    todo.pop()
            case Var(name):
                raise UnboundVariableError(name)
            case _:
                raise NotImplementedError(node)
    return done[id(t)]


def abstract_eliminate(t: LambdaTerm, eta: bool = True) -> Term:
    """Translate a closed λ-term into a combinator term over
    ``B C I K W`` (plus whatever constants ``t`` embeds).

    Binders are removed innermost first.

    :param t: the closed λ-term
    :param eta: use the η-rule ``λx (f) x = f`` for ``x`` not free in ``f``

    :raises UnboundVariableError: if ``t`` has a free variable
    """
    return _to_term(_binder_free(t, eta, {}))


def theta_prime(theta: Term, eta: bool = True) -> Term:
    """``λxλy (cc) λk ((θ)(k)x)(k)y``"""
    return abstract_eliminate(
        lam(
            'x y',
            LApp(
                Const(CC),
                Lam(
                    'k',
                    lapply(
                        Const(theta),
                        LApp(Var('k'), Var('x')),
                        LApp(Var('k'), Var('y')),
                    ),
                ),
            ),
        ),
        eta=eta,
    )


def theta_second(theta: Term, left: Term, right: Term) -> Term:
    return apply(theta_prime(theta), left, right)


def prelude(eta: bool = True) -> dict[str, Term]:
    """Named terms used throughout: numerals, a fixed point combinator, the
    integer induction realizer and the fork demo.
    """
    x, f = Var('x'), Var('f')
    half_y = abstract_eliminate(
        lam('x f', LApp(f, lapply(x, x, f))),
        eta=eta,
    )
    ind = abstract_eliminate(
        lam('x y z n', LApp(Var('x'), lapply(Var('n'), Var('y'), Var('z')))),
        eta=eta,
    )
    return {
        'zero': App(K, I),
        'succ': SUCC,
        'Y': App(half_y, half_y),
        'ind': ind,
        's_tilde': S_TILDE,
        'theta_prime': theta_prime(GAMMA, eta=eta),
    }


# reference machine

@dataclass(frozen=True, slots=True)
class Continuation:
    """The stack saved by ``cc`` in the reference machine."""
    saved: tuple[Closure, ...]


@dataclass(frozen=True, slots=True)
class Closure:
    term: LambdaTerm | Continuation
    env: Mapping[str, Closure] = field(default_factory=dict, hash=False)


def close(
        term: LambdaTerm,
        env: Mapping[str, Closure],
        memo: FreeVarMemo | None = None,
) -> Closure:
    """Build a closure whose environment binds exactly the free variables
    of ``term``.
    """
    if isinstance(term, Var):
        return env[term.name]
    names = free_vars(term, memo)
    return Closure(term, {n: env[n] for n in names})


def _const(t: Term) -> Closure:
    return Closure(Const(t))


_APPLY = LApp(Var('f'), Var('x'))


class RefOutcome(NamedTuple):
    """The observable result of a reference run.

    :param kind: one of ``accept``, ``stuck``, ``fuel`` and ``fork``
    :param detail: the accept kind or stuck reason
    :param payload: the decoded oracle payload of an oracle accept
    :param steps: machine steps taken
    :param events: ``(oracle name, payload)`` pairs seen during the run
    """
    kind: str
    detail: str | None
    payload: int | None
    steps: int
    events: tuple[tuple[str, int], ...] = ()

    @property
    def observable(self) -> tuple[str, str | int | None]:
        if self.kind == 'accept' and self.detail == 'oracle':
            return (self.kind, self.payload)
        return (self.kind, self.detail)


_TALLY = Oracle('#tally')
_DONE = Oracle('#done')


def _closure_h_indices(items: Sequence[Closure]) -> set[int]:
    from realizer.syntax import subterms

    found: set[int] = set()
    seen: set[int] = set()
    todo = list(items)
    while todo:
        clo = todo.pop()
        if id(clo) in seen:
            continue
        seen.add(id(clo))
        todo.extend(clo.env.values())
        if isinstance(clo.term, Continuation):
            todo.extend(clo.term.saved)
            continue
        lterms = [clo.term]
        while lterms:
            lt = lterms.pop()
            match lt:
                case Const(term):
                    found.update(
                        s.index for s in subterms(term)
                        if isinstance(s, HConst)
                    )
                case Lam(_, body):
                    lterms.append(body)
                case LApp(fun, arg):
                    lterms.extend((fun, arg))
    return found


class _Partial(Exception):
    pass


class _RefMachine:
    """An environment based call-by-name machine running λ-terms directly
    with the same instruction rules as :func:`realizer.machine.step`.
    """

    def __init__(
            self,
            mode: str,
            target: int | None,
            oracle: str,
            decode_fuel: int,
    ) -> None:
        self.mode = mode
        self.target = target
        self.oracle = oracle
        self.decode_fuel = decode_fuel
        self.memo: FreeVarMemo = {}

    def run(
            self,
            head: Closure,
            items: list[Closure],
            fuel: int,
            counting: bool = False,
    ) -> tuple[str, str | None, int | None, int]:
        """Run until a final state. Returns ``(kind, detail, payload,
        steps)``; with ``counting`` the tally and done constants count the
        iterations of a numeral.
        """
        steps = 0
        tally = 0
        # items[0] is the top of the stack
        while steps < fuel:
            term = head.term
            if isinstance(term, Continuation):
                if not items:
                    return ('stuck', 'arity', None, steps)
                head, items = items[0], list(term.saved)
                steps += 1
                continue
            match term:
                case Var(name):
                    head = head.env[name]
                    continue
                case LApp(fun, arg):
                    items.insert(0, close(arg, head.env, self.memo))
                    head = close(fun, head.env, self.memo)
                    steps += 1
                    continue
                case Lam(name, body):
                    if not items:
                        raise _Partial()
                    env = dict(head.env)
                    env[name] = items.pop(0)
                    head = close(body, env, self.memo)
                    steps += 1
                    continue
                case Const(App(fun, arg)):
                    items.insert(0, _const(arg))
                    head = _const(fun)
                    steps += 1
                    continue
                case Const(Oracle(name)) if counting and name == _TALLY.name:
                    if not items:
                        return ('stuck', 'not-a-numeral', None, steps)
                    tally += 1
                    head = items.pop(0)
                    steps += 1
                    continue
                case Const(Oracle(name)) if counting and name == _DONE.name:
                    return ('accept', 'numeral', tally, steps)
                case Const(Oracle()) if counting:
                    return ('stuck', 'head-constant', None, steps)
                case Const(Oracle(name)):
                    return self._oracle(name, items, steps)
                case Const(Instr(name)):
                    result = self._instr(name, head, items)
                    if isinstance(result, tuple):
                        return (*result, steps + (result[0] != 'stuck'))
                    head, items = result
                    steps += 1
                    continue
                case Const(HConst() | Cert()):
                    return ('stuck', 'head-constant', None, steps)
                case _:
                    raise NotImplementedError(term)
        return ('fuel', None, None, steps)

    def decode(self, clo: Closure) -> int | None:
        kind, detail, payload, _ = self.run(
            clo,
            [_const(_TALLY), _const(_DONE)],
            self.decode_fuel,
            counting=True,
        )
        return payload if kind == 'accept' and detail == 'numeral' else None

    def _oracle(
            self,
            name: str,
            items: list[Closure],
            steps: int,
    ) -> tuple[str, str | None, int | None, int]:
        if self.mode == 'none' or name != self.oracle:
            return ('stuck', 'head-constant', None, steps)
        if not items:
            return ('stuck', 'arity', None, steps)
        n = self.decode(items[0])
        if n is None or (self.mode == 'checker' and n != self.target):
            return ('stuck', 'oracle-reject', None, steps)
        return ('accept', 'oracle', n, steps + 1)

    def _instr(
            self,
            name: str,
            head: Closure,
            items: list[Closure],
    ) -> tuple[Closure, list[Closure]] | tuple[str, str | None, int | None]:
        arity = {
            'p': 0, 'a': 1, 'gamma': 3, 'e': 4, 'kappa': 1, 'I': 1, 'K': 2,
            'W': 2, 'C': 3, 'B': 3, 'cc': 1, 'chi': 1, "chi'": 2,
        }
        if name == 'p':
            return ('accept', 'stop', None)
        if name == 'frak-c':
            return ('stuck', 'head-constant', None)
        if len(items) < arity[name]:
            return ('stuck', 'arity', None)
        match name:
            case 'a':
                return items[0], []
            case 'gamma':
                return ('fork', None, None)
            case 'e':
                i, j = (self._h_index(c) for c in items[:2])
                if i is None or j is None:
                    return ('stuck', 'no-rule', None)
                if i == j:
                    return items[3], items[4:]
                return items[2], items[4:]
            case 'kappa':
                used = _closure_h_indices(items)
                fresh = next(n for n in range(len(used) + 1) if n not in used)
                return items[0], [_const(HConst(fresh)), *items[1:]]
            case 'I':
                return items[0], items[1:]
            case 'K':
                return items[0], items[2:]
            case 'W':
                return items[0], [items[1], items[1], *items[2:]]
            case 'C':
                return items[0], [items[2], items[1], *items[3:]]
            case 'B':
                applied = Closure(_APPLY, {'f': items[1], 'x': items[2]})
                return items[0], [applied, *items[3:]]
            case 'cc':
                saved = Closure(Continuation(tuple(items[1:])))
                return items[0], [saved, *items[1:]]
            case 'chi':
                if len(items) < 2:
                    return ('stuck', 'empty-back', None)
                return items[0], [items[-1], *items[1:-1]]
            case "chi'":
                return items[1], [*items[2:], items[0]]
            case _:
                raise NotImplementedError(name)

    @staticmethod
    def _h_index(clo: Closure) -> int | None:
        if isinstance(clo.term, Const) and isinstance(clo.term.term, HConst):
            return clo.term.term.index
        return None


def ref_run(
        t: LambdaTerm,
        stack: Sequence[Term] = (),
        fuel: int = 100_000,
        mode: str = 'none',
        target: int | None = None,
        oracle: str = 'delta',
        decode_fuel: int = 10_000,
) -> RefOutcome:
    """Run the closed λ-term ``t`` against ``stack`` on the reference
    environment machine.

    A λ head on the empty stack, also while decoding an oracle argument,
    ends the run as ``stuck`` with reason ``partial``: the combinator
    machine has no counterpart for that state.

    :param t: a closed λ-term
    :param stack: the initial stack, top first
    :param fuel: the maximum number of steps
    :param mode: the oracle mode, ``none``, ``checker`` or ``collector``
    :param target: the accepted numeral in ``checker`` mode
    """
    if free_vars(t):
        raise UnboundVariableError(sorted(free_vars(t))[0])
    machine = _RefMachine(mode, target, oracle, decode_fuel)
    try:
        kind, detail, payload, steps = machine.run(
            Closure(t),
            [_const(item) for item in stack],
            fuel,
        )
    except _Partial:
        logger.debug('reference run reached a partial application')
        return RefOutcome('stuck', 'partial', None, 0)
    events = ((oracle, payload),) if payload is not None else ()
    return RefOutcome(kind, detail, payload, steps, events)
