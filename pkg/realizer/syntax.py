from __future__ import annotations

import re
from collections.abc import Iterator
from dataclasses import dataclass
from typing import NamedTuple
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from realizer.forcing import CondSeq

INSTRUCTIONS = frozenset((
    'B', 'C', 'I', 'K', 'W', 'cc', 'a', 'p', 'gamma', 'kappa', 'e', 'chi',
    "chi'", 'frak-c',
))
ORACLE = 'delta'

# greek and fraktur spellings accepted by the tokenizer
ALIASES = {
    'γ': 'gamma',
    'κ': 'kappa',
    'χ': 'chi',
    "χ'": "chi'",
    'χ′': "chi'",
    "chi′": "chi'",
    '𝔠': 'frak-c',
    'δ': 'delta',
}


class ParseError(ValueError):
    """Raised when a text cannot be read as a term.

    :param msg: what went wrong
    :param text: the complete source text
    :param position: the offset into ``text`` where the problem was found
    """

    def __init__(self, msg: str, text: str, position: int) -> None:
        super().__init__(f'{msg} at position {position}')
        self.msg = msg
        self.text = text
        self.position = position


@dataclass(frozen=True, slots=True)
class Instr:
    name: str

    def __post_init__(self) -> None:
        if self.name not in INSTRUCTIONS:
            raise ValueError(f'unknown instruction: {self.name!r}')

    def __str__(self) -> str:
        return print_term(self)


@dataclass(frozen=True, slots=True)
class HConst:
    index: int

    def __str__(self) -> str:
        return print_term(self)


@dataclass(frozen=True, slots=True)
class Oracle:
    name: str

    def __str__(self) -> str:
        return print_term(self)


@dataclass(frozen=True, slots=True)
class Cert:
    """An inert certificate carrying a sequence of forcing conditions."""
    payload: CondSeq

    def __str__(self) -> str:
        return print_term(self)


@dataclass(frozen=True, slots=True)
class App:
    fun: Term
    arg: Term

    def __str__(self) -> str:
        return print_term(self)


Term = Instr | HConst | Oracle | Cert | App

B = Instr('B')
C = Instr('C')
I = Instr('I')  # noqa: E741
K = Instr('K')
W = Instr('W')
CC = Instr('cc')
ABORT = Instr('a')
STOP = Instr('p')
GAMMA = Instr('gamma')
KAPPA = Instr('kappa')
E = Instr('e')
CHI = Instr('chi')
CHI_PRIME = Instr("chi'")
FRAK_C = Instr('frak-c')
DELTA = Oracle(ORACLE)

# s = (BW)(B)B
SUCC = App(App(B, W), App(B, B))


def apply(head: Term, *args: Term) -> Term:
    """left-associated application ``head a1 a2 ...``"""
    for arg in args:
        head = App(head, arg)
    return head


@dataclass(frozen=True, slots=True)
class Stack:
    """A finite stack of terms. The front is the top, the back is the
    position next to the empty stack. ``Stack()`` is the empty stack.
    """
    items: tuple[Term, ...] = ()

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def push(self, t: Term) -> Stack:
        return Stack((t, *self.items))

    def pop(self) -> tuple[Term, Stack]:
        if not self.items:
            raise IndexError('pop from the empty stack')
        return self.items[0], Stack(self.items[1:])

    def push_back(self, t: Term) -> Stack:
        """Put ``t`` in place of the empty stack at the end, i.e. build
        the stack whose end register holds ``t``.
        """
        return Stack((*self.items, t))

    def pop_back(self) -> tuple[Term, Stack]:
        if not self.items:
            raise IndexError('pop_back from the empty stack')
        return self.items[-1], Stack(self.items[:-1])

    def __str__(self) -> str:
        return ' · '.join((*(print_term(t) for t in self.items), 'π0'))


PI0 = Stack()


def stack(*items: Term) -> Stack:
    return Stack(items)


class Process(NamedTuple):
    """A head term executed against a stack: ``head ⋆ stack``."""
    head: Term
    stack: Stack

    def __str__(self) -> str:
        return f'{print_term(self.head)} ⋆ {self.stack}'


def subterms(*roots: Term) -> Iterator[Term]:
    """Yield every subterm of ``roots``, without recursion, so very deep
    terms built at runtime can be inspected.
    """
    todo = list(roots)
    while todo:
        t = todo.pop()
        yield t
        if isinstance(t, App):
            todo.append(t.arg)
            todo.append(t.fun)


def is_proof_like(t: Term) -> bool:
    """``True`` iff ``t`` mentions none of ``a``, ``p``, the indexed
    constants and the oracle constants.

    :param t: the term to inspect
    """
    for sub in subterms(t):
        if isinstance(sub, (HConst, Oracle)):
            return False
        if isinstance(sub, Instr) and sub.name in ('a', 'p'):
            return False
    return True


def h_indices(p: Process) -> set[int]:
    return {
        sub.index
        for sub in subterms(p.head, *p.stack)
        if isinstance(sub, HConst)
    }


def occurs_h(index: int, p: Process) -> bool:
    """``True`` iff ``h<index>`` occurs in the head or in a stack item."""
    return any(
        isinstance(sub, HConst) and sub.index == index
        for sub in subterms(p.head, *p.stack)
    )


def numeral(n: int) -> Term:
    """The numeral ``s^n (K I)``.

    :param n: a natural number
    """
    if n < 0:
        raise ValueError(f'numerals are natural numbers, got {n}')
    t: Term = App(K, I)
    for _ in range(n):
        t = App(SUCC, t)
    return t


def k_term(pi: Stack) -> Term:
    """The continuation term restoring ``pi``.

    ``k`` of the empty stack is ``a`` and ``k`` of ``t·π`` is
    ``C (B k_π) t``, so applying it to ``ξ`` on any stack reaches
    ``ξ ⋆ pi``.
    """
    t: Term = ABORT
    for item in reversed(pi.items):
        t = App(App(C, App(B, t)), item)
    return t


def count_apps(t: Term) -> int:
    return sum(isinstance(sub, App) for sub in subterms(t))


def _atom_text(t: Term) -> str:
    match t:
        case Instr(name):
            return name
        case HConst(index):
            return f'h{index}'
        case Oracle(name):
            return name
        case Cert(payload):
            return f'<cert {payload}>'
        case _:
            raise NotImplementedError(t)


def print_term(t: Term) -> str:
    """Render ``t`` in the concrete syntax accepted by :func:`parse_term`.

    Application is left associative, so only arguments that are
    applications themselves are parenthesized.

    The text parses back to ``t`` unless ``t`` contains a certificate,
    printed as ``<cert …>``, or an oracle constant not named ``delta``,
    printed by its bare name. The concrete syntax has neither, since
    certificates are only built while checking the forcing laws.
    """
    out: list[str] = []
    # work items are terms to render or literal strings to emit
    todo: list[Term | str] = [t]
    while todo:
        item = todo.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        spine: list[Term] = []
        head = item
        while isinstance(head, App):
            spine.append(head.arg)
            head = head.fun
        pieces: list[Term | str] = [_atom_text(head)]
        for arg in reversed(spine):
            if isinstance(arg, App):
                pieces.extend((' (', arg, ')'))
            else:
                pieces.append(f' {_atom_text(arg)}')
        todo.extend(reversed(pieces))
    return ''.join(out)


class Token(NamedTuple):
    kind: str
    value: str
    position: int


_TOKEN_RE = re.compile(
    r'''
    (?P<ws>\s+)
    |(?P<comment>\#[^\n]*)
    |(?P<lparen>\()
    |(?P<rparen>\))
    |(?P<lam>\\|λ)
    |(?P<dot>\.)
    |(?P<comma>,)
    |(?P<numeral>n:\d+)(?![\w'′-])
    |(?P<hconst>h\d+)(?![\w'′-])
    |(?P<name>[^\W\d][\w'′-]*)
    ''',
    re.VERBOSE,
)


def tokenize(text: str) -> Iterator[Token]:
    """Split ``text`` into tokens, skipping whitespace and ``#`` comments.

    :raises ParseError: on a character that starts no token
    """
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f'unexpected character {text[pos]!r}', text, pos)
        kind = match.lastgroup
        assert kind is not None
        if kind not in ('ws', 'comment'):
            value = match.group(kind)
            if kind == 'name':
                value = ALIASES.get(value, value)
            yield Token(kind, value, pos)
        pos = match.end()


class TokenStream:
    """A cursor over the tokens of a text shared by the term and the
    λ-term parsers.
    """

    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = list(tokenize(text))
        self.index = 0

    def peek(self) -> Token | None:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def next(self) -> Token:
        token = self.peek()
        if token is None:
            raise self.error('unexpected end of input')
        self.index += 1
        return token

    def expect(self, kind: str) -> Token:
        token = self.next()
        if token.kind != kind:
            raise self.error(f'expected {kind}, got {token.value!r}', token)
        return token

    def error(self, msg: str, token: Token | None = None) -> ParseError:
        position = token.position if token is not None else len(self.text)
        return ParseError(msg, self.text, position)

    def finish(self) -> None:
        token = self.peek()
        if token is not None:
            raise self.error(f'unexpected {token.value!r}', token)


def atom_from_token(token: Token, stream: TokenStream) -> Term:
    """Turn a single atom token into a term.

    :raises ParseError: if the token is no term atom
    """
    match token.kind:
        case 'numeral':
            return numeral(int(token.value[2:]))
        case 'hconst':
            return HConst(int(token.value[1:]))
        case 'name' if token.value in INSTRUCTIONS:
            return Instr(token.value)
        case 'name' if token.value == ORACLE:
            return DELTA
        case _:
            raise stream.error(f'unknown atom {token.value!r}', token)


def _parse_application(stream: TokenStream) -> Term:
    # the partial application outside of each open parenthesis
    outer: list[Term | None] = []
    head: Term | None = None
    while True:
        token = stream.peek()
        if token is None or token.kind in ('rparen', 'comma'):
            if head is None:
                raise stream.error('expected a term', token)
            if not outer:
                return head
            stream.expect('rparen')
            arg, head = head, outer.pop()
        else:
            stream.next()
            if token.kind == 'lparen':
                outer.append(head)
                head = None
                continue
            arg = atom_from_token(token, stream)
        head = arg if head is None else App(head, arg)


def parse_term(text: str) -> Term:
    """Parse the concrete syntax of a term.

    :param text: e.g. ``'(C) (B) a I'`` or ``'gamma (delta n:3) h0 K'``

    :raises ParseError: with the position of the first offending token
    """
    stream = TokenStream(text)
    t = _parse_application(stream)
    stream.finish()
    return t


def parse_stack(text: str) -> Stack:
    """Parse a comma separated list of terms, top of the stack first. An
    empty text is the empty stack.
    """
    stream = TokenStream(text)
    if stream.peek() is None:
        return PI0
    items = [_parse_application(stream)]
    while stream.peek() is not None:
        stream.expect('comma')
        items.append(_parse_application(stream))
    return Stack(tuple(items))
