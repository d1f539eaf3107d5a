from __future__ import annotations

import logging
from typing import Any
from typing import Literal
from typing import NamedTuple

from realizer.dovetail import Certified
from realizer.dovetail import Failed
from realizer.dovetail import majority
from realizer.dovetail import Partial
from realizer.machine import Accept
from realizer.machine import Next
from realizer.machine import NO_ORACLE
from realizer.machine import OracleConfig
from realizer.machine import Scheduler
from realizer.machine import step
from realizer.machine import Stuck
from realizer.syntax import ABORT
from realizer.syntax import HConst
from realizer.syntax import Oracle
from realizer.syntax import Process
from realizer.syntax import Stack
from realizer.syntax import STOP
from realizer.syntax import subterms
from realizer.syntax import Term

__all__ = [
    'BranchSummary',
    'DecodeError',
    'ExtractReport',
    'ExtractResult',
    'decode_numeral',
    'extract_process',
    'extract_witness',
    'majority',
]

logger = logging.getLogger(__name__)

# counting constants, their names cannot be written in the term syntax
TALLY = Oracle('#tally')
DONE = Oracle('#done')


class DecodeError(Exception):
    """A term could not be read as a numeral.

    :param reason: ``not-a-numeral`` or ``fuel``
    """

    def __init__(self, reason: Literal['not-a-numeral', 'fuel']) -> None:
        super().__init__(reason)
        self.reason = reason


def decode_numeral(t: Term, fuel: int = 10_000) -> int:
    """Read the natural number ``t`` stands for by running ``t`` against two
    markers: the first counts how often it is called and continues with its
    argument, the second ends the run.

    :param t: any term that behaves like a numeral
    :param fuel: the maximum number of steps

    :raises DecodeError: if the run gets stuck or runs out of fuel
    """
    p = Process(t, Stack((TALLY, DONE)))
    count = 0
    for _ in range(fuel):
        head = p.head
        if head == DONE:
            return count
        if head == TALLY:
            if not p.stack:
                raise DecodeError('not-a-numeral')
            count += 1
            item, rest = p.stack.pop()
            p = Process(item, rest)
            continue
        result = step(p, NO_ORACLE)
        if not isinstance(result, Next):
            raise DecodeError('not-a-numeral')
        p = result.process
    raise DecodeError('fuel')


class ExtractResult(NamedTuple):
    """``value`` with the witness, ``ambiguous`` with the competing values
    or ``fail`` with a reason.
    """
    kind: Literal['value', 'ambiguous', 'fail']
    value: int | None = None
    candidates: frozenset[int] = frozenset()
    reason: str | None = None

    def __str__(self) -> str:
        if self.kind == 'value':
            return f'value {self.value}'
        elif self.kind == 'ambiguous':
            values = ', '.join(map(str, sorted(self.candidates)))
            return f'ambiguous {{{values}}}'
        else:
            return f'fail {self.reason}'


class BranchSummary(NamedTuple):
    """One leaf of the explored execution.

    :param path: the fork choices leading to the leaf
    :param status: ``accept``, ``stuck``, ``fuel`` or ``pruned``
    :param detail: the accept kind or stuck reason
    :param payload: the value delivered to the oracle
    """
    path: tuple[int, ...]
    status: str
    detail: str | None
    payload: int | None


class ExtractReport(NamedTuple):
    result: ExtractResult
    steps: int
    branches: tuple[BranchSummary, ...]

    def payloads(self) -> list[int]:
        return [b.payload for b in self.branches if b.payload is not None]

    def to_json(self) -> dict[str, Any]:
        return {
            'format': 1,
            'result': self.result.kind,
            'value': self.result.value,
            'candidates': sorted(self.result.candidates),
            'reason': self.result.reason,
            'steps': self.steps,
            'branches': [
                {
                    'path': list(b.path),
                    'status': b.status,
                    'detail': b.detail,
                    'payload': b.payload,
                }
                for b in self.branches
            ],
            'payloads': self.payloads(),
        }


def witness_valuation(result: Accept | Stuck, p: Process) -> Partial:
    if isinstance(result, Accept):
        if result.kind == 'oracle':
            return Certified(result.payload)
        return Failed('stuck')
    if result.reason == 'oracle-reject':
        return Failed('undecodable-leaf')
    return Failed('stuck')


def extract_process(
        p: Process,
        fuel: int = 100_000,
        oracle: str = 'delta',
        decode_fuel: int = 10_000,
) -> ExtractReport:
    """Run ``p`` with a collecting oracle and take the value certified by a
    majority at every fork.

    :param p: the process to run
    :param fuel: the step budget shared by all branches
    :param oracle: the name of the collecting oracle
    :param decode_fuel: the step budget for decoding one oracle argument
    """
    cfg = OracleConfig(mode='collector', name=oracle, decode_fuel=decode_fuel)
    schedule = Scheduler(cfg, valuation=witness_valuation).run(p, fuel)
    match schedule.result:
        case Certified(value):
            assert isinstance(value, int)
            result = ExtractResult('value', value=value)
        case Failed(reason, candidates) if len(candidates) >= 2:
            result = ExtractResult(
                'ambiguous',
                candidates=frozenset(
                    c for c in candidates if isinstance(c, int)
                ),
                reason=reason,
            )
        case Failed(reason):
            result = ExtractResult('fail', reason=reason)
        case _:
            raise NotImplementedError(schedule.result)
    branches = tuple(
        BranchSummary(path, leaf.status, leaf.detail, leaf.payload)
        for path, leaf in schedule.tree.leaves()
    )
    if result.kind != 'value':
        logger.warning(
            'extraction gave %s after %d steps', result, schedule.steps,
        )
    return ExtractReport(result, schedule.steps, branches)


def extract_witness(
        theta: Term,
        fuel: int = 100_000,
        oracle: str = 'delta',
        decode_fuel: int = 10_000,
) -> ExtractReport:
    """Recover the witness computed by ``theta``: run ``θ ⋆ δ·π0`` and
    report the integer obtained at least two times at each fork.

    :param theta: the realizer, proof-like apart from oracle constants
    :param fuel: the step budget shared by all branches
    :param oracle: the name of the collecting oracle ``δ``
    """
    delta = Oracle(oracle)
    if any(
        isinstance(s, HConst) or s in (ABORT, STOP) for s in subterms(theta)
    ):
        logger.debug('extracting from a term which is not proof-like')
    return extract_process(
        Process(theta, Stack((delta,))),
        fuel=fuel,
        oracle=oracle,
        decode_fuel=decode_fuel,
    )

