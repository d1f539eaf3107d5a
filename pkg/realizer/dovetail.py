from __future__ import annotations

from collections import Counter
from typing import Final
from typing import NamedTuple

# failure reasons, the most informative first
REASON_PRIORITY = ('fuel', 'undecodable-leaf', 'stuck', 'no-majority')


class Certified(NamedTuple):
    """A branch certified ``value``."""
    value: object


class Failed(NamedTuple):
    """A branch can no longer certify anything.

    :param reason: why the branch failed
    :param candidates: the values certified by the direct children of a
        failed fork
    """
    reason: str
    candidates: frozenset[object] = frozenset()


class _Pending:
    def __repr__(self) -> str:
        return 'PENDING'


PENDING: Final = _Pending()

Partial = Certified | Failed | _Pending


def worst_reason(reasons: list[str]) -> str:
    if not reasons:
        return 'no-majority'
    return min(reasons, key=REASON_PRIORITY.index)


def majority(first: Partial, second: Partial, third: Partial) -> Partial:
    """Combine the results of the three children of a fork.

    A value certified by at least two children is certified. The fork is
    still pending while some value could still be reached twice, otherwise
    it failed.

    :param first: result of the first child
    :param second: result of the second child
    :param third: result of the third child
    """
    children = (first, second, third)
    values = [c.value for c in children if isinstance(c, Certified)]
    pending = sum(c is PENDING for c in children)
    counts = Counter(values)
    for value in values:
        if counts[value] >= 2:
            return Certified(value)
    if pending >= 2 or any(n + pending >= 2 for n in counts.values()):
        return PENDING
    reasons = [c.reason for c in children if isinstance(c, Failed)]
    return Failed(worst_reason(reasons), frozenset(values))
