"""Game state model for k-row Chomp (k <= 4).

A position is a non-increasing tuple of row lengths, e.g. (4, 2, 2, 0),
with row 1 the longest row.  The poison square sits at row 1, column 1.
Taking square (i, j) removes it together with everything above and to the
right, which in row-length terms truncates rows i..k to at most j-1 cells.
The move (1, 1) is never legal; the position (1, 0, ..., 0) is therefore
the unique terminal P-position.

Positions pack into a single 64-bit integer with four 16-bit fields, the
first row in the highest field.  With that layout unsigned integer order
equals lexicographic order on (a, b, c, d), so a sorted array of packed
codes is a lexicographically sorted position list for free.
"""

from __future__ import annotations

from math import comb
from typing import Iterator, Sequence

Position = tuple[int, ...]

FIELD_BITS = 16
FIELD_MAX = (1 << FIELD_BITS) - 1
MAX_ROWS = 4

_SHIFTS = (48, 32, 16, 0)


class InvalidPositionError(ValueError):
    """Row lengths are negative, increasing, or all zero."""


class EncodingError(ValueError):
    """Position does not fit the 4x16-bit packed layout."""


def validate_position(rows: Sequence[int]) -> Position:
    """Return ``rows`` as a tuple, or raise InvalidPositionError.

    Valid positions have non-negative, non-increasing rows and at least
    one remaining cell (the all-zero tuple is unreachable in play).
    """
    p = tuple(int(r) for r in rows)
    if not 1 <= len(p) <= MAX_ROWS:
        raise InvalidPositionError(f"need 1..{MAX_ROWS} rows, got {len(p)}")
    if any(r < 0 for r in p):
        raise InvalidPositionError(f"negative row length in {p}")
    if any(p[i] < p[i + 1] for i in range(len(p) - 1)):
        raise InvalidPositionError(f"rows must be non-increasing: {p}")
    if p[0] == 0:
        raise InvalidPositionError("all-zero position is unreachable")
    return p


def is_valid(rows: Sequence[int]) -> bool:
    try:
        validate_position(rows)
    except InvalidPositionError:
        return False
    return True


def total_cells(p: Sequence[int]) -> int:
    return sum(p)


def pack(p: Sequence[int]) -> int:
    """Encode a position as a 64-bit integer, first row in bits 48..63.

    Rows beyond len(p) pack as zero, so k < 4 positions embed at the
    same codes as their zero-padded 4-row form.
    """
    rows = validate_position(p)
    if any(r > FIELD_MAX for r in rows):
        raise EncodingError(f"row length over {FIELD_MAX} in {rows}")
    code = 0
    for value, shift in zip(rows, _SHIFTS):
        code |= value << shift
    return code


def unpack(code: int, k: int = MAX_ROWS) -> Position:
    """Decode a packed code back to a k-row position (inverse of pack)."""
    if not 0 <= code < 1 << 64:
        raise EncodingError(f"code out of 64-bit range: {code}")
    if not 1 <= k <= MAX_ROWS:
        raise InvalidPositionError(f"k must be 1..{MAX_ROWS}, got {k}")
    fields = tuple((code >> shift) & FIELD_MAX for shift in _SHIFTS)
    if any(fields[i] != 0 for i in range(k, MAX_ROWS)):
        raise InvalidPositionError(
            f"code {code:#018x} has non-zero rows beyond k={k}"
        )
    return validate_position(fields[:k])


def successors(p: Sequence[int]) -> set[Position]:
    """All distinct positions reachable in one move.

    A move picks an existing square (i, j) other than the poison square
    and truncates rows i..k to at most j-1.  Distinct squares can yield
    the same child; the result is deduplicated.
    """
    rows = validate_position(p)
    k = len(rows)
    out: set[Position] = set()
    for i in range(k):
        first_col = 2 if i == 0 else 1
        for j in range(first_col, rows[i] + 1):
            cut = j - 1
            out.add(rows[:i] + tuple(min(r, cut) for r in rows[i:]))
    return out


def enumerate_layer(s: int, n_max: int, k: int = MAX_ROWS) -> Iterator[Position]:
    """Yield every valid k-row position with total cell count s, in
    lexicographic order, subject to rows[0] <= n_max."""
    if not 1 <= k <= MAX_ROWS:
        raise InvalidPositionError(f"k must be 1..{MAX_ROWS}, got {k}")
    if not 1 <= s <= k * n_max:
        raise ValueError(f"cell count {s} outside 1..{k * n_max}")
    yield from _parts(s, n_max, k)


def _parts(remaining: int, cap: int, slots: int) -> Iterator[Position]:
    if slots == 1:
        if remaining <= cap:
            yield (remaining,)
        return
    lo = -(-remaining // slots)  # first slot is the largest, so >= ceil
    for head in range(lo, min(cap, remaining) + 1):
        for tail in _parts(remaining - head, head, slots - 1):
            yield (head, *tail)


def count_states(n_max: int, k: int) -> int:
    """Number of valid k-row positions with 1 <= rows[0] <= n_max.

    Closed form: non-increasing k-tuples over 0..n_max number
    C(n_max + k, k); dropping the all-zero tuple gives the state count.
    """
    return comb(n_max + k, k) - 1
