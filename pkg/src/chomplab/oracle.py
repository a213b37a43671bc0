"""Independent reference solver used to cross-check the fast solver.

Everything here is deliberately naive: plain tuples, a plain dict memo,
an explicit work stack, and move generation written directly from the
game rules rather than shared with the optimized code.  Its only job is
to be obviously correct, so it enforces small size ceilings and does no
performance work at all.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

Rows = tuple[int, ...]

DEFAULT_CEILING = {1: 1000, 2: 500, 3: 60, 4: 25}


class OracleLimitError(ValueError):
    """Requested sweep exceeds the oracle's size ceiling."""


@dataclass
class OracleCache:
    """Memo of evaluated positions; True marks a P-position."""

    memo: dict[Rows, bool] = field(default_factory=dict)


def _moves(rows: Rows) -> set[Rows]:
    # Take square (i, j): rows i.. drop to <= j-1.  Row 0 starts at column
    # 2 because column 1 is the poison square.
    out: set[Rows] = set()
    for i in range(len(rows)):
        first_col = 2 if i == 0 else 1
        for j in range(first_col, rows[i] + 1):
            cut = j - 1
            out.add(rows[:i] + tuple(min(r, cut) for r in rows[i:]))
    return out


def oracle_is_p(p: Rows, cache: OracleCache | None = None) -> bool:
    """True iff the player to move loses ``p`` under optimal play.

    Top-down evaluation with memoization; the recursion is unrolled onto
    an explicit stack so degenerate inputs cannot hit the interpreter
    recursion limit.  The cache is single-threaded.
    """
    memo = (cache or OracleCache()).memo
    root = tuple(p)
    stack = [root]
    while stack:
        q = stack[-1]
        if q in memo:
            stack.pop()
            continue
        succ = _moves(q)
        pending = [r for r in succ if r not in memo]
        if pending:
            stack.extend(pending)
        else:
            memo[q] = not any(memo[r] for r in succ)
            stack.pop()
    return memo[root]


def oracle_pset(n_max: int, k: int, ceiling: int | None = None) -> set[Rows]:
    """All P-positions with rows[0] <= n_max, by exhaustive sweep.

    Refuses to run above the per-k ceiling (default 25 for k=4, 60 for
    k=3): the point of this solver is simplicity, not speed.
    """
    if ceiling is None:
        ceiling = DEFAULT_CEILING.get(k)
    if ceiling is None:
        raise OracleLimitError(f"no oracle ceiling defined for k={k}")
    if n_max > ceiling:
        raise OracleLimitError(
            f"n_max={n_max} above the k={k} oracle ceiling {ceiling}"
        )
    cache = OracleCache()
    out: set[Rows] = set()
    for rows in itertools.product(range(n_max + 1), repeat=k):
        if rows[0] < 1:
            continue
        if any(rows[i] < rows[i + 1] for i in range(k - 1)):
            continue
        if oracle_is_p(rows, cache):
            out.add(rows)
    return out
