from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable
from typing import Any
from typing import Literal
from typing import NamedTuple

from realizer.dovetail import Certified
from realizer.dovetail import Failed
from realizer.dovetail import majority
from realizer.dovetail import Partial
from realizer.dovetail import PENDING
from realizer.syntax import App
from realizer.syntax import Cert
from realizer.syntax import FRAK_C
from realizer.syntax import h_indices
from realizer.syntax import HConst
from realizer.syntax import Instr
from realizer.syntax import k_term
from realizer.syntax import Oracle
from realizer.syntax import Process
from realizer.syntax import Stack
from realizer.syntax import Term

logger = logging.getLogger(__name__)

StuckReason = Literal[
    'head-constant', 'arity', 'empty-back', 'no-rule', 'oracle-reject',
]
Rule = int | Literal['oracle']


class OracleConfig(NamedTuple):
    """How the machine treats oracle heads and fresh constants.

    :param mode: ``none`` (oracles are plain constants), ``checker``
        (accept the numeral ``target`` only) or ``collector`` (accept any
        numeral and record it)
    :param target: the numeral accepted in ``checker`` mode
    :param name: the name of the oracle constant
    :param fresh: ``least`` picks the least unused index for ``kappa``,
        ``next`` one above the largest index in use
    :param normalize_certs: let ``chi`` hand over ``Cert(s)`` in place of a
        ``frak-c`` chain ending in ``Cert(s)``
    :param decode_fuel: step budget for decoding an oracle argument
    """
    mode: Literal['none', 'checker', 'collector'] = 'none'
    target: int | None = None
    name: str = 'delta'
    fresh: Literal['least', 'next'] = 'least'
    normalize_certs: bool = False
    decode_fuel: int = 10_000

    @classmethod
    def parse(cls, text: str, **kwargs: Any) -> OracleConfig:
        """Read ``none``, ``collect`` or ``check:N``.

        :raises ValueError: on anything else
        """
        if text == 'none':
            return cls(mode='none', **kwargs)
        elif text == 'collect':
            return cls(mode='collector', **kwargs)
        elif text.startswith('check:') and text[6:].isdigit():
            return cls(mode='checker', target=int(text[6:]), **kwargs)
        else:
            raise ValueError(f'invalid oracle mode: {text!r}')


NO_ORACLE = OracleConfig()


class Next(NamedTuple):
    process: Process
    rule: Rule


class Branch3(NamedTuple):
    left: Process
    middle: Process
    right: Process
    rule: Rule = 3


class Accept(NamedTuple):
    kind: Literal['stop', 'oracle']
    payload: int | None = None
    rule: Rule = 1


class Stuck(NamedTuple):
    reason: StuckReason


StepResult = Next | Branch3 | Accept | Stuck

# number of stack items each instruction consumes
ARITY = {
    'a': 1, 'gamma': 3, 'e': 4, 'kappa': 1, 'I': 1, 'K': 2, 'W': 2,
    'C': 3, 'B': 3, 'cc': 1, 'chi': 1, "chi'": 2,
}


def _fresh_index(p: Process, policy: str) -> int:
    used = h_indices(p)
    if policy == 'next':
        return max(used, default=-1) + 1
    return next(n for n in range(len(used) + 1) if n not in used)


def _oracle_step(p: Process, cfg: OracleConfig) -> StepResult:
    from realizer.extract import decode_numeral
    from realizer.extract import DecodeError

    assert isinstance(p.head, Oracle)
    if cfg.mode == 'none' or p.head.name != cfg.name:
        return Stuck('head-constant')
    if not p.stack:
        return Stuck('arity')
    try:
        n = decode_numeral(p.stack.items[0], fuel=cfg.decode_fuel)
    except DecodeError:
        return Stuck('oracle-reject')
    if cfg.mode == 'checker' and n != cfg.target:
        return Stuck('oracle-reject')
    return Accept('oracle', n, rule='oracle')


def step(p: Process, cfg: OracleConfig = NO_ORACLE) -> StepResult:
    """Perform one step of the machine.

    Exactly one clause applies to a process. Failure is never raised, it is
    returned as :class:`Stuck`.

    :param p: the process to reduce
    :param cfg: how to treat oracle constants and fresh indices
    """
    head, stack = p
    if isinstance(head, App):
        return Next(Process(head.fun, stack.push(head.arg)), 7)
    if isinstance(head, Oracle):
        return _oracle_step(p, cfg)
    if not isinstance(head, Instr) or head == FRAK_C:
        return Stuck('head-constant')
    if head.name == 'p':
        return Accept('stop')
    if len(stack) < ARITY[head.name]:
        return Stuck('arity')

    items = stack.items
    match head.name:
        case 'a':
            return Next(Process(items[0], Stack()), 2)
        case 'gamma':
            rest = Stack(items[3:])
            return Branch3(
                Process(items[0], rest),
                Process(items[1], rest),
                Process(items[2], rest),
            )
        case 'e':
            first, second = items[0], items[1]
            if not (isinstance(first, HConst) and isinstance(second, HConst)):
                return Stuck('no-rule')
            if first.index == second.index:
                return Next(Process(items[3], Stack(items[4:])), 4)
            return Next(Process(items[2], Stack(items[4:])), 5)
        case 'kappa':
            fresh = HConst(_fresh_index(p, cfg.fresh))
            return Next(Process(items[0], Stack((fresh, *items[1:]))), 6)
        case 'I':
            return Next(Process(items[0], Stack(items[1:])), 8)
        case 'K':
            return Next(Process(items[0], Stack(items[2:])), 9)
        case 'W':
            return Next(
                Process(items[0], Stack((items[1], items[1], *items[2:]))),
                10,
            )
        case 'C':
            return Next(
                Process(items[0], Stack((items[2], items[1], *items[3:]))),
                11,
            )
        case 'B':
            return Next(
                Process(
                    items[0],
                    Stack((App(items[1], items[2]), *items[3:])),
                ),
                12,
            )
        case 'cc':
            rest = Stack(items[1:])
            return Next(Process(items[0], rest.push(k_term(rest))), 13)
        case 'chi':
            if len(items) < 2:
                return Stuck('empty-back')
            back = items[-1]
            if cfg.normalize_certs:
                back = _normalize(back)
            return Next(Process(items[0], Stack((back, *items[1:-1]))), 14)
        case "chi'":
            return Next(
                Process(items[1], Stack(items[2:]).push_back(items[0])),
                15,
            )
        case _:
            raise NotImplementedError(head.name)


def _normalize(t: Term) -> Term:
    from realizer.forcing import cert_normalize
    from realizer.forcing import CertificateError

    try:
        return Cert(cert_normalize(t))
    except CertificateError:
        return t


class RunOutcome(NamedTuple):
    """The end of a linear run.

    :param kind: ``accept``, ``stuck``, ``fuel`` or ``fork``
    :param steps: the number of steps taken
    :param process: the last process reached
    :param detail: the accept kind or the stuck reason
    :param payload: the oracle payload of an oracle accept
    """
    kind: Literal['accept', 'stuck', 'fuel', 'fork']
    steps: int
    process: Process
    detail: str | None = None
    payload: int | None = None

    @property
    def observable(self) -> tuple[str, str | int | None]:
        if self.kind == 'accept' and self.detail == 'oracle':
            return (self.kind, self.payload)
        return (self.kind, self.detail)

    def __str__(self) -> str:
        if self.kind == 'accept' and self.detail == 'oracle':
            what = f'accept(oracle {self.payload})'
        elif self.detail is not None:
            what = f'{self.kind}({self.detail})'
        else:
            what = self.kind
        unit = 'step' if self.steps == 1 else 'steps'
        return f'{what} in {self.steps} {unit}'


class TraceLine(NamedTuple):
    """The process reached after step ``n`` by the rule ``rule``."""
    n: int
    process: Process
    rule: Rule

    def __str__(self) -> str:
        return f'#{self.n} {self.process}  [rule {self.rule}]'


def run_linear(
        p: Process,
        fuel: int,
        cfg: OracleConfig = NO_ORACLE,
        on_step: Callable[[TraceLine], None] | None = None,
) -> RunOutcome:
    """Step ``p`` until it accepts, gets stuck, forks or runs out of fuel.

    :param p: the initial process
    :param fuel: the maximum number of steps
    :param cfg: the oracle configuration
    :param on_step: called with every :class:`TraceLine`
    """
    steps = 0
    while steps < fuel:
        result = step(p, cfg)
        match result:
            case Next(process, rule):
                steps += 1
                p = process
                if on_step is not None:
                    on_step(TraceLine(steps, p, rule))
            case Accept(kind, payload):
                return RunOutcome('accept', steps + 1, p, kind, payload)
            case Stuck(reason):
                return RunOutcome('stuck', steps, p, reason)
            case Branch3():
                return RunOutcome('fork', steps, p)
            case _:
                raise NotImplementedError(result)
    logger.debug('linear run ran out of fuel after %d steps', steps)
    return RunOutcome('fuel', steps, p)


def trace(
        p: Process,
        fuel: int,
        cfg: OracleConfig = NO_ORACLE,
) -> tuple[list[TraceLine], RunOutcome]:
    lines: list[TraceLine] = []
    outcome = run_linear(p, fuel, cfg, on_step=lines.append)
    return lines, outcome


def format_trace(lines: list[TraceLine]) -> str:
    return '\n'.join(str(line) for line in lines)


class Step(NamedTuple):
    rule: Rule
    process: Process


class Leaf(NamedTuple):
    """How a branch ended.

    :param status: ``accept``, ``stuck``, ``fuel`` or ``pruned``
    :param detail: the accept kind or the stuck reason
    :param payload: the oracle payload of an oracle accept
    """
    status: Literal['accept', 'stuck', 'fuel', 'pruned']
    detail: str | None = None
    payload: int | None = None


class ExecTree(NamedTuple):
    """The execution of a process, one node per linear segment.

    :param node: the first process of the segment
    :param trail: the steps taken inside the segment
    :param rule: ``fork`` when the segment ends with a fork, else ``None``
    :param children: the three branches of a fork, otherwise empty
    :param leaf: how the segment ended if it did not fork
    """
    node: Process
    trail: tuple[Step, ...]
    rule: Literal['fork'] | None
    children: tuple[ExecTree, ...]
    leaf: Leaf | None

    @property
    def last(self) -> Process:
        return self.trail[-1].process if self.trail else self.node

    def height(self) -> int:
        """the number of processes on the longest branch"""
        best = 0
        todo = [(self, 0)]
        while todo:
            tree, above = todo.pop()
            own = above + 1 + len(tree.trail)
            best = max(best, own)
            todo.extend((child, own) for child in tree.children)
        return best

    def leaves(
            self,
            path: tuple[int, ...] = (),
    ) -> list[tuple[tuple[int, ...], Leaf]]:
        """all leaves with their path of fork choices, left to right"""
        found: list[tuple[tuple[int, ...], Leaf]] = []
        todo: list[tuple[tuple[int, ...], ExecTree]] = [(path, self)]
        while todo:
            where, tree = todo.pop()
            if tree.leaf is not None:
                found.append((where, tree.leaf))
            todo.extend(
                ((*where, i), child)
                for i, child in reversed(list(enumerate(tree.children)))
            )
        return found

    def to_json(self) -> dict[str, Any]:
        root: dict[str, Any] = {}
        todo: list[tuple[ExecTree, dict[str, Any]]] = [(self, root)]
        while todo:
            tree, out = todo.pop()
            leaf = tree.leaf
            out.update(
                node=str(tree.node),
                steps=[
                    {'rule': s.rule, 'process': str(s.process)}
                    for s in tree.trail
                ],
                rule=tree.rule,
                children=[{} for _ in tree.children],
                leaf=leaf._asdict() if leaf is not None else None,
            )
            todo.extend(zip(tree.children, out['children']))
        return root


def exec_tree_to_json(tree: ExecTree) -> dict[str, Any]:
    return {'format': 1, 'tree': tree.to_json()}


Valuation = Callable[[Accept | Stuck, Process], Partial]


def pole_valuation(result: Accept | Stuck, p: Process) -> Partial:
    if isinstance(result, Accept):
        return Certified(True)
    return Failed('stuck')


class _Segment:
    __slots__ = (
        'node', 'process', 'trail', 'children', 'leaf', 'parent', 'result',
        'pruned',
    )

    def __init__(self, node: Process, parent: _Segment | None) -> None:
        self.node = node
        self.process = node
        self.trail: list[Step] = []
        self.children: list[_Segment] = []
        self.leaf: Leaf | None = None
        self.parent = parent
        self.result: Partial = PENDING
        self.pruned = False


class Schedule(NamedTuple):
    tree: ExecTree
    result: Partial
    steps: int


class Scheduler:
    """Round-robin execution of all open branches of a process.

    Every visit of an open branch performs exactly one step and the order
    of visits does not depend on the fuel, so any result obtained with some
    fuel is obtained with more fuel too.

    :param cfg: the oracle configuration
    :param valuation: values accepting and stuck leaves
    :param prune: stop branches whose fork is already decided and stop the
        whole run once the root is decided
    :param record: keep every step of every segment in the tree, otherwise
        the segments of the returned tree have empty trails
    """

    def __init__(
            self,
            cfg: OracleConfig = NO_ORACLE,
            valuation: Valuation = pole_valuation,
            prune: bool = True,
            record: bool = False,
    ) -> None:
        self.cfg = cfg
        self.valuation = valuation
        self.prune = prune
        self.record = record

    def run(self, p: Process, fuel: int) -> Schedule:
        root = _Segment(p, None)
        queue = deque([root])
        steps = 0
        while queue and steps < fuel:
            if self.prune and root.result is not PENDING:
                break
            seg = queue.popleft()
            if seg.pruned:
                continue
            result = step(seg.process, self.cfg)
            match result:
                case Next(process, rule):
                    steps += 1
                    if self.record:
                        seg.trail.append(Step(rule, process))
                    seg.process = process
                    queue.append(seg)
                case Branch3(left, middle, right):
                    steps += 1
                    seg.children = [
                        _Segment(child, seg) for child in (left, middle, right)
                    ]
                    queue.extend(seg.children)
                case Accept(kind, payload):
                    steps += 1
                    seg.leaf = Leaf('accept', kind, payload)
                    self._settle(seg, self.valuation(result, seg.process))
                case Stuck(reason):
                    seg.leaf = Leaf('stuck', reason)
                    self._settle(seg, self.valuation(result, seg.process))
                case _:
                    raise NotImplementedError(result)
        if root.result is PENDING:
            logger.debug('schedule ran out of fuel after %d steps', steps)
        result = self._finish(root)
        return Schedule(self._freeze(root), result, steps)

    def _settle(self, seg: _Segment, result: Partial) -> None:
        seg.result = result
        parent = seg.parent
        while parent is not None and parent.result is PENDING:
            combined = majority(*(c.result for c in parent.children))
            if combined is PENDING:
                return
            parent.result = combined
            if self.prune:
                for child in parent.children:
                    if child.result is PENDING:
                        self._prune(child)
            parent = parent.parent

    @staticmethod
    def _prune(seg: _Segment) -> None:
        todo = [seg]
        while todo:
            current = todo.pop()
            current.pruned = True
            todo.extend(current.children)

    @staticmethod
    def _finish(root: _Segment) -> Partial:
        """Decide what is still open when the fuel is gone."""
        finished: dict[int, Partial] = {}
        todo = [root]
        while todo:
            seg = todo[-1]
            if seg.result is not PENDING:
                finished[id(seg)] = seg.result
            elif not seg.children:
                finished[id(seg)] = Failed('fuel')
            elif missing := [
                c for c in seg.children if id(c) not in finished
            ]:
                todo.extend(missing)
                continue
            else:
                finished[id(seg)] = majority(
                    *(finished[id(c)] for c in seg.children),
                )
            todo.pop()
        return finished[id(root)]

    @staticmethod
    def _freeze(root: _Segment) -> ExecTree:
        frozen: dict[int, ExecTree] = {}
        todo = [root]
        while todo:
            seg = todo[-1]
            if missing := [c for c in seg.children if id(c) not in frozen]:
                todo.extend(missing)
                continue
            todo.pop()
            leaf = seg.leaf
            if leaf is None and not seg.children:
                leaf = Leaf('pruned') if seg.pruned else Leaf('fuel')
            frozen[id(seg)] = ExecTree(
                node=seg.node,
                trail=tuple(seg.trail),
                rule='fork' if seg.children else None,
                children=tuple(frozen[id(c)] for c in seg.children),
                leaf=leaf,
            )
        return frozen[id(root)]


def exec_tree(
        p: Process,
        fuel: int,
        cfg: OracleConfig = NO_ORACLE,
) -> ExecTree:
    """Expand the execution of ``p``. All branches share ``fuel``, each open
    branch is advanced one step per round.
    """
    return Scheduler(cfg, prune=False, record=True).run(p, fuel).tree


class PoleVerdict(NamedTuple):
    """Whether a process was shown to be in the pole.

    :param status: ``yes`` (the tree proves membership), ``unknown`` (the
        fuel ran out first) or ``no-evidence`` (every way to membership is
        stuck)
    :param tree: the explored execution, ``None`` for vacuous verdicts
    :param steps: the steps used
    """
    status: Literal['yes', 'unknown', 'no-evidence']
    tree: ExecTree | None
    steps: int


def in_pole(
        p: Process,
        fuel: int,
        cfg: OracleConfig = NO_ORACLE,
) -> PoleVerdict:
    """Look for a proof that ``p`` is in the pole. A fork is in the pole as
    soon as two of its branches are.

    :param p: the process to check
    :param fuel: the step budget shared by all branches
    :param cfg: the oracle configuration defining the accepting leaves
    """
    schedule = Scheduler(cfg).run(p, fuel)
    match schedule.result:
        case Certified():
            status: Literal['yes', 'unknown', 'no-evidence'] = 'yes'
        case Failed('fuel'):
            status = 'unknown'
        case _:
            status = 'no-evidence'
    logger.debug('pole check of %s: %s in %d steps', p, status, schedule.steps)
    return PoleVerdict(status, schedule.tree, schedule.steps)
