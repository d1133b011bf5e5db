"""Dividing partitions of clopen sets and approximate division.

A column is a base clopen together with group words ``w_1, ..., w_n``; its
levels are ``base, w_1(base), ..., w_n(base)``.  A :class:`DividingPartition`
with parameter ``N`` is a list of columns with at least ``N`` words each,
whose levels are pairwise disjoint and together make up ``covered``.  Every
measure invariant under the generators gives all levels of a column the same
mass, which is what approximate division exploits.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cantor import (
    UNIFORM,
    BernoulliMeasure,
    ClopenSet,
    GeneratorPool,
    GroupWord,
    cylinder_measure,
    word_inverse,
    word_mul,
)
from .vectors import format_rational

PARTITION_SCHEMA = "partition.v1"
MODES = ("all", "weight")
DEFAULT_WORD_BUDGET = 12


class PartitionError(ValueError):
    pass


class CoverError(RuntimeError):
    """No dividing partition was found within the word budget."""


@dataclass(frozen=True)
class Column:
    base: ClopenSet
    witnesses: Tuple[GroupWord, ...]
    levels: Tuple[ClopenSet, ...]

    @property
    def height(self) -> int:
        return len(self.witnesses)


def make_column(pool: GeneratorPool, base: ClopenSet, witnesses: Sequence[GroupWord]) -> Column:
    witnesses = tuple(tuple(w) for w in witnesses)
    levels = (base,) + tuple(pool.apply(w, base) for w in witnesses)
    return Column(base, witnesses, levels)


@dataclass(frozen=True)
class DividingPartition:
    N: int
    covered: ClopenSet
    columns: Tuple[Column, ...]
    pool: GeneratorPool

    def problems(self) -> List[str]:
        """Every violated invariant, recomputing the levels from the words."""
        out = []
        if self._levels_disjoint():
            for i, col in enumerate(self.columns):
                if col.height < self.N:
                    out.append(f"column {i} has {col.height} words, fewer than N={self.N}")
                if not col.base:
                    out.append(f"column {i} has an empty base")
                for j, w in enumerate(col.witnesses, start=1):
                    if self.pool.apply(w, col.base) != col.levels[j]:
                        out.append(f"column {i}: level {j} is not the image of the base")
            every = [w for col in self.columns for level in col.levels for w in level.words]
            if ClopenSet(tuple(every)) != self.covered:
                out.append("the levels do not make up the covered set")
            return out
        # slow path, naming the first level that overlaps
        seen = ClopenSet.empty()
        for i, col in enumerate(self.columns):
            if col.height < self.N:
                out.append(f"column {i} has {col.height} words, fewer than N={self.N}")
            if not col.base:
                out.append(f"column {i} has an empty base")
            for j, w in enumerate(col.witnesses, start=1):
                if self.pool.apply(w, col.base) != col.levels[j]:
                    out.append(f"column {i}: level {j} is not the image of the base")
            for j, level in enumerate(col.levels):
                if not seen.isdisjoint(level):
                    out.append(f"column {i}: level {j} meets an earlier set")
                seen = seen | level
        if seen != self.covered:
            out.append("the levels do not make up the covered set")
        return out

    def _levels_disjoint(self) -> bool:
        # Each level is prefix-free, so two levels meet exactly when some word
        # of one is a prefix of (or equal to) a word of the other; after
        # sorting, such a pair is adjacent.
        every = sorted(w for col in self.columns for level in col.levels for w in level.words)
        return not any(b.startswith(a) for a, b in zip(every, every[1:]))

    def atoms(self) -> List[ClopenSet]:
        return [level for col in self.columns for level in col.levels]

    def to_json(self) -> dict:
        return {
            "schema": PARTITION_SCHEMA,
            "N": self.N,
            "covered": list(self.covered.words),
            "generators": self.pool.to_json(),
            "columns": [
                {"base": list(c.base.words), "witnesses": [[list(l) for l in w] for w in c.witnesses]}
                for c in self.columns
            ],
        }


def partition_from_json(data: dict) -> DividingPartition:
    if not isinstance(data, dict) or data.get("schema", PARTITION_SCHEMA) != PARTITION_SCHEMA:
        raise PartitionError("not a partition.v1 document")
    try:
        pool = GeneratorPool(tuple(s) for s in data["generators"])
        cols = tuple(
            make_column(pool, ClopenSet(tuple(c["base"])),
                        [tuple((int(g), int(e)) for g, e in w) for w in c["witnesses"]])
            for c in data["columns"])
        part = DividingPartition(int(data["N"]), ClopenSet(tuple(data["covered"])), cols, pool)
    except (KeyError, TypeError, ValueError) as exc:
        raise PartitionError(f"malformed partition: {exc}") from exc
    problems = part.problems()
    if problems:
        raise PartitionError("invalid partition: " + "; ".join(problems[:3]))
    return part


def empty_partition(N: int, pool: GeneratorPool) -> DividingPartition:
    return DividingPartition(N, ClopenSet.empty(), (), pool)


def single_column(N: int, pool: GeneratorPool, base: ClopenSet,
                  witnesses: Sequence[GroupWord]) -> DividingPartition:
    col = make_column(pool, base, witnesses)
    covered = ClopenSet.empty()
    for level in col.levels:
        covered = covered | level
    part = DividingPartition(N, covered, (col,), pool)
    problems = part.problems()
    if problems:
        raise PartitionError("; ".join(problems))
    return part


# -- the two basic operations -------------------------------------------------

def _split_pieces(pieces: List[ClopenSet], cut: ClopenSet) -> List[ClopenSet]:
    out = []
    for p in pieces:
        inside = p & cut
        if inside and inside != p:
            out.extend([inside, p - inside])
        else:
            out.append(p)
    return out


def refine_column(part: DividingPartition, index: int, base_partition: Sequence[ClopenSet]
                  ) -> DividingPartition:
    """Split column ``index`` along a partition of its base, replicated up the column."""
    col = part.columns[index]
    union = ClopenSet.empty()
    for piece in base_partition:
        if not piece:
            raise PartitionError("base partition has an empty piece")
        if not union.isdisjoint(piece):
            raise PartitionError("base partition pieces overlap")
        union = union | piece
    if union != col.base:
        raise PartitionError("pieces do not partition the base of the column")
    new = tuple(make_column(part.pool, piece, col.witnesses) for piece in base_partition)
    cols = part.columns[:index] + new + part.columns[index + 1:]
    return DividingPartition(part.N, part.covered, cols, part.pool)


def add_on_top(part: DividingPartition, index: int, level: int, V: ClopenSet, g: GroupWord
               ) -> DividingPartition:
    """Add ``V = g(U[index][level])`` as a new top level of column ``index``."""
    if not part.covered.isdisjoint(V):
        raise PartitionError("the added set meets the covered set")
    col = part.columns[index]
    if part.pool.apply(g, col.levels[level]) != V:
        raise PartitionError("the group word does not map the atom onto the added set")
    prior = col.witnesses[level - 1] if level > 0 else ()
    word = word_mul(tuple(g), prior)
    new = Column(col.base, col.witnesses + (word,), col.levels + (V,))
    cols = part.columns[:index] + (new,) + part.columns[index + 1:]
    return DividingPartition(part.N, part.covered | V, cols, part.pool)


# -- merging -------------------------------------------------------------------

def _refine_against(part: DividingPartition, tests: Sequence[ClopenSet]) -> DividingPartition:
    """Refine every column so each level lies inside or outside each test set."""
    cols: List[Column] = []
    for col in part.columns:
        pieces = [col.base]
        for j, level in enumerate(col.levels):
            back = word_inverse(col.witnesses[j - 1]) if j > 0 else ()
            for t in tests:
                cut = level & t
                if cut and cut != level:
                    pieces = _split_pieces(pieces, part.pool.apply(back, cut))
        if len(pieces) == 1:
            cols.append(col)
        else:
            cols.extend(make_column(part.pool, p, col.witnesses) for p in pieces)
    return DividingPartition(part.N, part.covered, tuple(cols), part.pool)


def merge_single_column(part: DividingPartition, base: ClopenSet, maps: Sequence[GroupWord],
                        position: int = 0) -> Tuple[DividingPartition, ClopenSet]:
    """One merge step against the column ``(base, h_1(base), ..., h_m(base))``.

    The level at ``position`` (0 is the base) plays the part of the new
    base.  Where that level meets the covered set ``A``, the partition is
    refined and the images of the overlap under the other maps are added on
    top whenever they miss ``A``.  Returns the new partition and the part
    of ``base`` that is still left over.  The column's levels that precede
    ``position`` are assumed already disjoint from the covered set.
    """
    maps = [()] + [tuple(h) for h in maps]
    if part.N > len(maps) - 1:
        raise PartitionError("the merged column is shorter than N")
    pool = part.pool
    A = part.covered
    level = pool.apply(maps[position], base)
    V = level & A
    if not V:
        return part, base
    back = word_inverse(maps[position])
    moves = [(j, word_mul(maps[j], back)) for j in range(len(maps)) if j != position]
    tests = [V] + [V & pool.apply(word_inverse(g), A) for _, g in moves]
    part = _refine_against(part, tests)
    i = 0
    while i < len(part.columns):
        col = part.columns[i]
        for l, L in enumerate(col.levels):
            if not L.issubset(V):
                continue
            for _, g in moves:
                img = pool.apply(g, L)
                if img.isdisjoint(A):
                    part = add_on_top(part, i, l, img, g)
        i += 1
    rest = base - pool.apply(back, V)
    return part, rest


def _adopt(part: DividingPartition, pool: GeneratorPool) -> List[Tuple[ClopenSet, List[GroupWord]]]:
    return [(c.base, [pool.translate(part.pool, w) for w in c.witnesses]) for c in part.columns]


def merge_partitions(pA: DividingPartition, pB: DividingPartition) -> DividingPartition:
    """Dividing partition of the union of the two covered sets.

    Each column of ``pB`` is merged one level at a time; whatever part of
    its base survives every level becomes a new column.
    """
    if pA.N != pB.N:
        raise PartitionError("partitions have different N")
    part = pA
    if pA.covered.isdisjoint(pB.covered):
        # nothing to absorb: every column of pB survives whole
        cols = tuple(make_column(pA.pool, base, maps) for base, maps in _adopt(pB, pA.pool))
        return DividingPartition(pA.N, pA.covered | pB.covered, pA.columns + cols, pA.pool)
    for base, maps in _adopt(pB, pA.pool):
        rest = base
        for position in range(len(maps) + 1):
            if not rest:
                break
            part, rest = merge_single_column(part, rest, maps, position)
        if rest:
            col = make_column(part.pool, rest, maps)
            covered = part.covered
            for level in col.levels:
                covered = covered | level
            part = DividingPartition(part.N, covered, part.columns + (col,), part.pool)
    return part


# -- existence -----------------------------------------------------------------

def _all_swaps_cover(A: ClopenSet, N: int, pool: GeneratorPool) -> List[DividingPartition]:
    r = 0
    while 2 ** r < N + 1:
        r += 1
    parts = []
    for w in A.words:
        base = w + "0" * r
        others = [w + format(t, f"0{r}b") for t in range(1, 2 ** r)]
        words = [pool.letter(base, o) for o in others]
        parts.append(single_column(N, pool, ClopenSet.of(base), words))
    return parts


def _weight_cover(A: ClopenSet, N: int, pool: GeneratorPool, word_budget: int
                  ) -> List[DividingPartition]:
    start = max(A.max_depth(), 1)
    for depth in range(start, word_budget + 1):
        classes: Dict[int, List[str]] = {}
        for w in A.expand(depth):
            classes.setdefault(w.count("1"), []).append(w)
        # Lengthening words never enlarges the lightest or the heaviest class:
        # each of their words extends in exactly one way (by zeros, resp. ones).
        for extreme in (min(classes), max(classes)):
            if len(classes[extreme]) < N + 1:
                raise CoverError(
                    f"only {len(classes[extreme])} cylinders of A carry {extreme} ones at "
                    f"length {depth}; a column needs {N + 1}, at any length")
        if all(len(ws) >= N + 1 for ws in classes.values()):
            parts = []
            for _, ws in sorted(classes.items()):
                words = [pool.letter(ws[0], o) for o in ws[1:]]
                parts.append(single_column(N, pool, ClopenSet.of(ws[0]), words))
            return parts
    raise CoverError(
        f"no weight-preserving cover of the set with N={N} using words of length <= {word_budget}")


def cover_clopen(A: ClopenSet, N: int, mode: str = "all", word_budget: int = DEFAULT_WORD_BUDGET,
                 pool: Optional[GeneratorPool] = None) -> DividingPartition:
    """N-dividing partition of ``A`` built from cylinder swaps.

    ``all``: each maximal cylinder ``[w]`` becomes one column with base
    ``[w 0^r]`` and a swap to every other ``[w t]``, ``|t| = r``, where
    ``2^r >= N + 1``.  ``weight``: the words of ``A`` at a common length are
    grouped by their number of ones and each group becomes one column; the
    length grows until every group has ``N + 1`` members or exceeds
    ``word_budget``.  The per-cylinder partitions are then merged.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if not A:
        raise ValueError("cannot cover the empty set")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    pool = GeneratorPool() if pool is None else pool
    if mode == "all":
        if A.max_depth() + 1 > word_budget:
            raise CoverError("set is deeper than the word budget allows")
        pieces = _all_swaps_cover(A, N, pool)
    else:
        pieces = _weight_cover(A, N, pool, word_budget)
    part = empty_partition(N, pool)
    for p in pieces:
        part = merge_partitions(part, p)
    return part


# -- approximate division --------------------------------------------------------

def choose_N(n: int, eps: Fraction) -> int:
    """Smallest integer strictly above ``n / eps``."""
    return int(Fraction(n) / eps) + 1


def division_sets(part: DividingPartition, n: int) -> Tuple[List[ClopenSet], List[Tuple[int, int]]]:
    """The sets ``B_0..B_{n-1}`` and the pairs ``(p_i, q_i)`` per column."""
    words: List[List[str]] = [[] for _ in range(n)]
    pq = []
    for col in part.columns:
        p, q = divmod(len(col.levels), n)
        pq.append((p, q))
        for k in range(n):
            for l in range(p):
                words[k].extend(col.levels[k + n * l].words)
    return [ClopenSet(tuple(ws)) for ws in words], pq


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CANTOR_SIMPLEX_THREADS", "1")))
    except ValueError:
        return 1


def _measure_report(part: DividingPartition, A: ClopenSet, B: List[ClopenSet], n: int,
                    eps: Fraction, m: BernoulliMeasure) -> dict:
    N = part.N
    mu_A = cylinder_measure(A, m)
    mu_B = [cylinder_measure(b, m) for b in B]
    base_mass = sum((cylinder_measure(c.base, m) for c in part.columns), Fraction(0))
    level_ok = all(cylinder_measure(level, m) == cylinder_measure(c.base, m)
                   for c in part.columns for level in c.levels)
    gap = mu_A - n * mu_B[0]
    bound = Fraction(n - 1, N) * mu_A
    checks = {
        "levels_equal_measure": level_ok,
        "B_equal_measure": all(x == mu_B[0] for x in mu_B),
        "upper": n * mu_B[0] <= mu_A,
        "lower": mu_A - eps <= n * mu_B[0],
        "internal_bound": gap <= bound,
        "bound_within_eps": bound <= eps,
        "base_mass": base_mass < mu_A / N,
    }
    return {
        "p": m.label(),
        "mu_A": format_rational(mu_A),
        "mu_B0": format_rational(mu_B[0]),
        "n_mu_B0": format_rational(n * mu_B[0]),
        "gap": format_rational(gap),
        "bound": format_rational(bound),
        "base_mass": format_rational(base_mass),
        "checks": checks,
        "ok": all(checks.values()),
    }


def divide_with_partition(part: DividingPartition, n: int, eps: Fraction,
                          measures: Sequence[BernoulliMeasure] = (UNIFORM,)
                          ) -> Tuple[ClopenSet, dict]:
    A = part.covered
    B, pq = division_sets(part, n)
    disjoint = all(B[i].isdisjoint(B[j]) for i in range(n) for j in range(i + 1, n))
    inside = all(b.issubset(A) for b in B)
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        reports = list(ex.map(lambda m: _measure_report(part, A, B, n, eps, m), measures))
    ok = disjoint and inside and all(r["ok"] for r in reports) and not part.problems()
    cert = {
        "N": part.N,
        "n": n,
        "eps": format_rational(eps),
        "columns": len(part.columns),
        "column_pq": [list(x) for x in pq],
        "B0": list(B[0].words),
        "B_disjoint": disjoint,
        "B_inside_A": inside,
        "measures": reports,
        "status": "VERIFIED" if ok else "FAILED",
    }
    return B[0], cert


def approx_divide(A: ClopenSet, n: int, eps, mode: str = "all",
                  measures: Sequence[BernoulliMeasure] = (UNIFORM,),
                  word_budget: int = DEFAULT_WORD_BUDGET) -> Tuple[ClopenSet, dict]:
    """``B`` inside ``A`` with ``mu(A) - eps <= n mu(B) <= mu(A)`` for every measure.

    The measures must be invariant under the generator family: only the
    uniform measure in ``all`` mode, any Bernoulli measure in ``weight`` mode.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    measures = [m if isinstance(m, BernoulliMeasure) else BernoulliMeasure(m) for m in measures]
    if mode == "all" and any(m.p != UNIFORM.p for m in measures):
        raise ValueError("only the uniform measure is invariant under all cylinder swaps")
    N = choose_N(n, eps)
    part = cover_clopen(A, N, mode, word_budget)
    B0, cert = divide_with_partition(part, n, eps, measures)
    cert["mode"] = mode
    cert["A"] = list(A.words)
    return B0, cert
