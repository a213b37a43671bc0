"""Retrograde tabulation of all Chomp P-positions up to a width bound.

States are evaluated in increasing order of total cell count, so every
successor of a state is classified before the state itself.  Only
P-positions are stored; a state is a P-position exactly when none of its
moves reaches a stored P-position.

Instead of scanning each state's move list, the solver keeps ten small
"min tables" over the P-set found so far.  Every legal move from
(a, b, c, d) lands in one of ten shapes, depending on which row is cut
and how far the cut reaches into the rows below it:

    row 4:  (a, b, c, e) e<d
    row 3:  (a, b, e, e) e<=min(d,c-1)   (a, b, e, d) d<=e<c
    row 2:  (a, e, c, d) c<=e<b          (a, e, e, d) d<=e<c     (a, e, e, e) e<d
    row 1:  (e, b, c, d) b<=e<a          (e, e, c, d) c<=e<b
            (e, e, e, d) d<=e<c          (e, e, e, e) 1<=e<d

Each shape fixes all but one coordinate (or a run of equal coordinates),
so "some move hits a P-position" is equivalent to "the smallest stored
value of the free coordinate under this projection is below the bound".
The tables hold exactly those minima, keyed by non-increasing coordinate
triples (or pairs / singletons), and are updated once per completed
layer.  Classification of a whole layer is then ten vectorized gathers,
independent of board size.

Within one layer no state depends on another (moves strictly shrink the
cell count), so layers may be classified in parallel.  Work is split
into fixed-size blocks whose boundaries do not depend on the thread
count, which makes the output bit-identical for any thread_count and
any move_order.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Callable, Iterator

import numpy as np

from .position import (
    FIELD_MAX,
    MAX_ROWS,
    Position,
    count_states,
    pack,
    unpack,
    validate_position,
)

DEFAULT_STATE_LIMIT = 3_000_000_000
_NO_ENTRY = np.uint16(0xFFFF)
_BLOCK = 1 << 18
_SUFFIX_FIELD_BITS = 10  # suffixes pack as b<<20 | c<<10 | d


class StateLimitError(RuntimeError):
    """Solve would enumerate more states than the configured ceiling."""


class PositionRangeError(ValueError):
    """Queried position lies outside the tabulated range."""


class MoveOrder(Enum):
    """Order in which move groups are probed for the N short-circuit.

    Purely a performance knob: the classification of every state, and
    therefore the solved P-set, is identical for every member.
    ``LEXICOGRAPHIC`` probes all groups at once with no short-circuit.
    """

    BOTTOM_ROW_FIRST = "bottom_row_first"
    TOP_ROW_FIRST = "top_row_first"
    LEXICOGRAPHIC = "lexicographic"


@dataclass(frozen=True)
class SolveConfig:
    n_max: int
    k: int = 4
    thread_count: int = 1
    move_order: MoveOrder = MoveOrder.BOTTOM_ROW_FIRST
    state_limit: int = DEFAULT_STATE_LIMIT
    allow_large: bool = False

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if not 1 <= self.k <= MAX_ROWS:
            raise ValueError(f"k must be 1..{MAX_ROWS}, got {self.k}")
        if self.thread_count < 1:
            raise ValueError(f"thread_count must be >= 1, got {self.thread_count}")
        if self.n_max > FIELD_MAX:
            raise ValueError(f"n_max must fit 16 bits, got {self.n_max}")
        if not isinstance(self.move_order, MoveOrder):
            object.__setattr__(self, "move_order", MoveOrder(self.move_order))


class PSet:
    """The set of all P-positions with rows[0] <= n_max, k rows.

    Positions are stored as a sorted, immutable array of packed 64-bit
    codes, so iteration order is lexicographic and membership tests are
    binary searches.  Safe for concurrent readers.
    """

    __slots__ = ("codes", "n_max", "k")

    def __init__(self, codes: np.ndarray, n_max: int, k: int):
        codes = np.ascontiguousarray(codes, dtype=np.uint64)
        if codes.size and (np.diff(codes.astype(np.int64)) <= 0).any():
            raise ValueError("codes must be strictly increasing")
        self.codes = codes
        self.codes.setflags(write=False)
        self.n_max = int(n_max)
        self.k = int(k)

    @property
    def count(self) -> int:
        return int(self.codes.size)

    def __len__(self) -> int:
        return self.count

    def __contains__(self, p) -> bool:
        code = np.uint64(pack(self._widen(p)))
        i = int(np.searchsorted(self.codes, code))
        return i < self.codes.size and self.codes[i] == code

    def __eq__(self, other) -> bool:
        if not isinstance(other, PSet):
            return NotImplemented
        return (
            self.k == other.k
            and self.n_max == other.n_max
            and np.array_equal(self.codes, other.codes)
        )

    def _widen(self, p) -> Position:
        rows = validate_position(p)
        if len(rows) > self.k:
            if any(rows[self.k :]):
                raise PositionRangeError(
                    f"{rows} has more than k={self.k} non-empty rows"
                )
            rows = rows[: self.k]
        return rows + (0,) * (self.k - len(rows))

    def positions(self) -> Iterator[Position]:
        for code in self.codes.tolist():
            yield unpack(code, self.k)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate columns (a, b, c, d), lexicographically sorted."""
        c = self.codes
        mask = np.uint64(FIELD_MAX)
        return tuple(
            ((c >> np.uint64(sh)) & mask).astype(np.int32) for sh in (48, 32, 16, 0)
        )

    def d_values(self) -> np.ndarray:
        """Fourth coordinates in lexicographic position order."""
        return (self.codes & np.uint64(FIELD_MAX)).astype(np.int64)


def is_p(pset: PSet, p) -> bool:
    """Membership test against the tabulated set."""
    rows = validate_position(p)
    if rows[0] > pset.n_max:
        raise PositionRangeError(
            f"rows[0]={rows[0]} exceeds tabulated n_max={pset.n_max}"
        )
    return p in pset


def build_triple_index(pset: PSet) -> dict[tuple[int, int, int], list[int]]:
    """Group P-positions by (a, b, c) prefix.

    Each value lists the fourth coordinates (ascending) of stored
    positions with that prefix; the lists' total length equals
    pset.count.  Because d <= c <= b <= a, every extension of a triple
    with a <= n_max is inside the tabulated range.
    """
    a, b, c, d = (col.tolist() for col in pset.arrays())
    index: dict[tuple[int, int, int], list[int]] = {}
    for key, di in zip(zip(a, b, c), d):
        index.setdefault(key, []).append(di)
    return index


class _MinTables:
    """Projection minima over the P-positions found so far.

    Triple keys (three fixed coordinates, always a non-increasing triple
    bounded by n_max) map into flat arrays through the combinatorial
    numbering C(x+2,3) + C(y+1,2) + z; pair and singleton keys use plain
    row-major indexing.  0xFFFF means "no entry".
    """

    def __init__(self, n_max: int):
        n1 = n_max + 1
        self.n1 = n1
        r = np.arange(n1 + 1, dtype=np.int64)
        self.tet = (r * (r + 1) * (r + 2) // 6).astype(np.int32)  # C(x+2,3)
        self.tri = (r * (r + 1) // 2).astype(np.int32)  # C(y+1,2)
        size3 = comb(n_max + 3, 3)
        size2 = n1 * n1
        self.min_d_abc = np.full(size3, _NO_ENTRY)  # d | (a,b,c) fixed
        self.min_c_abd = np.full(size3, _NO_ENTRY)  # c | (a,b,d) fixed
        self.min_b_acd = np.full(size3, _NO_ENTRY)  # b | (a,c,d) fixed
        self.min_a_bcd = np.full(size3, _NO_ENTRY)  # a | (b,c,d) fixed
        self.min_cc_ab = np.full(size2, _NO_ENTRY)  # e: (a,b,e,e)
        self.min_bb_ad = np.full(size2, _NO_ENTRY)  # e: (a,e,e,d)
        self.min_aa_cd = np.full(size2, _NO_ENTRY)  # e: (e,e,c,d)
        self.min_bbb_a = np.full(n1, _NO_ENTRY)  # e: (a,e,e,e)
        self.min_aaa_d = np.full(n1, _NO_ENTRY)  # e: (e,e,e,d)
        self.min_aaaa = 1 << 30  # e: (e,e,e,e)

    def _i3(self, x, y, z):
        return self.tet[x] + self.tri[y] + z

    # Move-group probes.  Each returns "state has a move to a stored
    # P-position in this group"; comparisons against 0xFFFF are always
    # false because every bound is < 2^16 - 1.

    def row4(self, a, b, c, d):
        return self.min_d_abc[self._i3(a, b, c)] < d

    def row3(self, a, b, c, d):
        hit = self.min_cc_ab[a * self.n1 + b] <= np.minimum(d, c - 1)
        hit |= self.min_c_abd[self._i3(a, b, d)] < c
        return hit

    def row2(self, a, b, c, d):
        hit = self.min_b_acd[self._i3(a, c, d)] < b
        hit |= self.min_bb_ad[a * self.n1 + d] < c
        hit |= self.min_bbb_a[a] < d
        return hit

    def row1(self, a, b, c, d):
        hit = self.min_a_bcd[self._i3(b, c, d)] < a
        hit |= self.min_aa_cd[c * self.n1 + d] < b
        hit |= self.min_aaa_d[d] < c
        hit |= self.min_aaaa < d
        return hit

    def all_rows(self, a, b, c, d):
        return (
            self.row1(a, b, c, d)
            | self.row2(a, b, c, d)
            | self.row3(a, b, c, d)
            | self.row4(a, b, c, d)
        )

    def groups(self, order: MoveOrder):
        if order is MoveOrder.BOTTOM_ROW_FIRST:
            return [self.row4, self.row3, self.row2, self.row1]
        if order is MoveOrder.TOP_ROW_FIRST:
            return [self.row1, self.row2, self.row3, self.row4]
        return [self.all_rows]

    def add_layer(self, a, b, c, d):
        """Fold the layer's new P-positions into the minima.

        Within one layer every table key is unique (the key plus the
        layer's cell count pin the free coordinate), so plain
        gather/minimum/scatter is race-free.
        """
        dv = d.astype(np.uint16)
        cv = c.astype(np.uint16)
        bv = b.astype(np.uint16)
        av = a.astype(np.uint16)
        i = self._i3(a, b, c)
        self.min_d_abc[i] = np.minimum(self.min_d_abc[i], dv)
        i = self._i3(a, b, d)
        self.min_c_abd[i] = np.minimum(self.min_c_abd[i], cv)
        i = self._i3(a, c, d)
        self.min_b_acd[i] = np.minimum(self.min_b_acd[i], bv)
        i = self._i3(b, c, d)
        self.min_a_bcd[i] = np.minimum(self.min_a_bcd[i], av)

        m = c == d
        if m.any():
            i = a[m] * self.n1 + b[m]
            self.min_cc_ab[i] = np.minimum(self.min_cc_ab[i], cv[m])
        m = b == c
        if m.any():
            i = a[m] * self.n1 + d[m]
            self.min_bb_ad[i] = np.minimum(self.min_bb_ad[i], bv[m])
        m = a == b
        if m.any():
            i = c[m] * self.n1 + d[m]
            self.min_aa_cd[i] = np.minimum(self.min_aa_cd[i], av[m])
        m = (b == c) & (c == d)
        if m.any():
            i = a[m]
            self.min_bbb_a[i] = np.minimum(self.min_bbb_a[i], bv[m])
        m = (a == b) & (b == c)
        if m.any():
            i = d[m]
            self.min_aaa_d[i] = np.minimum(self.min_aaa_d[i], av[m])
            mm = m & (c == d)
            if mm.any():
                self.min_aaaa = min(self.min_aaaa, int(a[mm].min()))


class _SuffixTable:
    """All zero-padded non-increasing (k-1)-suffixes (b, c, d), b <= n_max,
    packed as b<<20 | c<<10 | d and grouped by suffix sum.

    Within one sum group the packed order is (b, c, d)-lexicographic, so
    slicing a group at b <= bound is a searchsorted prefix."""

    def __init__(self, n_max: int, k: int):
        if n_max >= 1 << _SUFFIX_FIELD_BITS:
            raise StateLimitError(
                f"suffix packing supports n_max < {1 << _SUFFIX_FIELD_BITS}"
            )
        b, c, d = _suffix_columns(n_max, k)
        t = b + c + d
        order = np.lexsort((d, c, b, t))
        self.packed = (
            (b[order] << (2 * _SUFFIX_FIELD_BITS)) | (c[order] << _SUFFIX_FIELD_BITS) | d[order]
        ).astype(np.uint32)
        self.t_max = (k - 1) * n_max
        counts = np.bincount(t, minlength=self.t_max + 1)
        self.offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    def group(self, t: int, b_cap: int) -> np.ndarray:
        """Packed suffixes with sum t and b <= b_cap."""
        lo, hi = self.offsets[t], self.offsets[t + 1]
        block = self.packed[lo:hi]
        end = np.searchsorted(block, np.uint32((b_cap + 1) << (2 * _SUFFIX_FIELD_BITS)))
        return block[:end]


def _suffix_columns(n_max: int, k: int):
    n1 = n_max + 1
    if k == 1:
        z = np.zeros(1, dtype=np.int64)
        return z, z.copy(), z.copy()
    if k == 2:
        b = np.arange(n1, dtype=np.int64)
        z = np.zeros(n1, dtype=np.int64)
        return b, z, z.copy()
    # pairs (x, y) with x >= y >= 0, x <= n_max, ordered by x then y
    counts = np.arange(1, n1 + 1, dtype=np.int64)
    x = np.repeat(np.arange(n1, dtype=np.int64), counts)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    y = np.arange(x.size, dtype=np.int64) - np.repeat(starts, counts)
    if k == 3:
        return x, y, np.zeros(x.size, dtype=np.int64)
    # k == 4: prepend every b >= x; pairs with x <= b form a prefix
    pair_prefix = (np.arange(1, n1 + 1, dtype=np.int64) * np.arange(2, n1 + 2)) // 2
    b = np.repeat(np.arange(n1, dtype=np.int64), pair_prefix)
    block_starts = np.concatenate(([0], np.cumsum(pair_prefix)[:-1]))
    pos = np.arange(b.size, dtype=np.int64) - np.repeat(block_starts, pair_prefix)
    return b, x[pos], y[pos]


def _unpack_suffixes(packed: np.ndarray):
    mask = np.int32((1 << _SUFFIX_FIELD_BITS) - 1)
    p = packed.astype(np.int32)
    return (p >> (2 * _SUFFIX_FIELD_BITS)) & mask, (p >> _SUFFIX_FIELD_BITS) & mask, p & mask


def _classify_block(tables, groups, a, b, c, d):
    is_n = np.zeros(a.size, dtype=bool)
    idx = None
    for g in groups:
        if idx is None:
            is_n = g(a, b, c, d)
            idx = np.flatnonzero(~is_n)
        else:
            if idx.size == 0:
                break
            hit = g(a[idx], b[idx], c[idx], d[idx])
            is_n[idx[hit]] = True
            idx = idx[~hit]
    return is_n


ProgressFn = Callable[[int, int, int], None]


def solve(cfg: SolveConfig, progress: ProgressFn | None = None) -> PSet:
    """Tabulate every P-position with rows[0] <= cfg.n_max.

    Layers are processed in increasing cell count; the returned set is
    identical (bit for bit, once packed and sorted) for every
    thread_count and move_order.  ``progress`` is called once per layer
    with (cell_count, layer_p_count, cumulative_p_count).

    Raises StateLimitError when the exact state count exceeds
    cfg.state_limit and allow_large is not set.
    """
    n_states = count_states(cfg.n_max, cfg.k)
    if n_states > cfg.state_limit and not cfg.allow_large:
        raise StateLimitError(
            f"{n_states} states exceed the ceiling {cfg.state_limit}; "
            "set allow_large to override"
        )
    n, k = cfg.n_max, cfg.k
    suffixes = _SuffixTable(n, k)
    tables = _MinTables(n)
    groups = tables.groups(cfg.move_order)

    pool = ThreadPoolExecutor(cfg.thread_count) if cfg.thread_count > 1 else None
    code_chunks: list[np.ndarray] = []
    total = 0
    try:
        for s in range(1, k * n + 1):
            a, b, c, d = _layer_states(s, n, k, suffixes)
            if a.size:
                is_n = _classify(tables, groups, pool, a, b, c, d)
                keep = ~is_n
                layer_p = int(np.count_nonzero(keep))
                if layer_p:
                    pa, pb, pc, pd = a[keep], b[keep], c[keep], d[keep]
                    code_chunks.append(_pack_columns(pa, pb, pc, pd))
                    tables.add_layer(pa, pb, pc, pd)
                    total += layer_p
            else:
                layer_p = 0
            if progress is not None:
                progress(s, layer_p, total)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    codes = np.concatenate(code_chunks)
    codes.sort()
    return PSet(codes, n_max=n, k=k)


def _layer_states(s: int, n_max: int, k: int, suffixes: _SuffixTable):
    a_lo = max(1, -(-s // k), s - suffixes.t_max)
    a_hi = min(n_max, s)
    packed_parts = []
    a_parts = []
    for a in range(a_lo, a_hi + 1):
        block = suffixes.group(s - a, a)
        if block.size:
            packed_parts.append(block)
            a_parts.append(np.full(block.size, a, dtype=np.int32))
    if not packed_parts:
        empty = np.empty(0, dtype=np.int32)
        return empty, empty.copy(), empty.copy(), empty.copy()
    a = np.concatenate(a_parts)
    b, c, d = _unpack_suffixes(np.concatenate(packed_parts))
    return a, b, c, d


def _classify(tables, groups, pool, a, b, c, d):
    blocks = [(lo, min(lo + _BLOCK, a.size)) for lo in range(0, a.size, _BLOCK)]

    def work(span):
        lo, hi = span
        return _classify_block(tables, groups, a[lo:hi], b[lo:hi], c[lo:hi], d[lo:hi])

    if pool is not None and len(blocks) > 1:
        parts = list(pool.map(work, blocks))
    else:
        parts = [work(span) for span in blocks]
    return parts[0] if len(parts) == 1 else np.concatenate(parts)


def _pack_columns(a, b, c, d) -> np.ndarray:
    out = a.astype(np.uint64) << np.uint64(48)
    out |= b.astype(np.uint64) << np.uint64(32)
    out |= c.astype(np.uint64) << np.uint64(16)
    out |= d.astype(np.uint64)
    return out
