"""Partial isomorphisms between chains, grown by back-and-forth.

A :class:`PartialIso` pairs a clopen partition of one chain with a clopen
partition of another, piece by piece, with equal measure vectors.  The
finite subalgebras generated by the two partitions are then isomorphic.
Extending the map to cover a new atom may require realizing a split in the
receiving chain; when the chain does not contain it yet, a Fraisse task is
discharged there, so the chains grow as needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .algebra import ROOT_ID, Embedding, FiniteMeasuredAlgebra, is_embedding
from .chain import (
    BudgetExhausted,
    LimitChain,
    find_subset,
    leaf_items,
    one_point_extension,
    piece_witness,
    split_task,
)
from .vectors import format_vector

DEFAULT_STAGE_BUDGET = 64


class HomogeneityError(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True, eq=False)
class PartialIso:
    left: LimitChain
    right: LimitChain
    pairs: Tuple[Tuple[Tuple[str, ...], Tuple[str, ...]], ...]

    @classmethod
    def empty(cls, left: LimitChain, right: LimitChain) -> "PartialIso":
        return cls(left, right, (((ROOT_ID,), (ROOT_ID,)),))

    def inverse(self) -> "PartialIso":
        return PartialIso(self.right, self.left, tuple((v, u) for u, v in self.pairs))

    def with_chains(self, left: LimitChain, right: LimitChain, pairs) -> "PartialIso":
        return PartialIso(left, right, tuple(pairs))

    def _algebra(self, chain: LimitChain, side: int) -> FiniteMeasuredAlgebra:
        return FiniteMeasuredAlgebra(chain.k, tuple(
            (f"p{i:04d}", chain.measure(pair[side])) for i, pair in enumerate(self.pairs)))

    def as_embedding(self) -> Embedding:
        """The induced map between the generated subalgebras, as an embedding."""
        src = self._algebra(self.left, 0)
        dst = self._algebra(self.right, 1)
        return Embedding(src, dst, {a: frozenset([a]) for a in src.ids})

    def problems(self) -> List[str]:
        out = []
        for chain, side, name in ((self.left, 0, "left"), (self.right, 1, "right")):
            seen = set()
            for i, pair in enumerate(self.pairs):
                ls = chain.leaves(pair[side])
                if not ls:
                    out.append(f"{name} piece {i} is empty")
                if seen & ls:
                    out.append(f"{name} piece {i} overlaps an earlier piece")
                seen |= ls
            if seen != set(chain.last.ids):
                out.append(f"{name} pieces do not cover the space")
        if not out:
            ok, why = is_embedding(self.as_embedding())
            if not ok:
                out.append(why)
        return out

    def covers(self, atom: str, side: str = "left") -> bool:
        chain, idx = (self.left, 0) if side == "left" else (self.right, 1)
        x = chain.leaves([atom])
        for pair in self.pairs:
            ls = chain.leaves(pair[idx])
            if ls & x and not ls <= x:
                return False
        return True

    def image(self, ids) -> List[str]:
        """Image of a covered left clopen (an atom id or a list of ids)."""
        ids = [ids] if isinstance(ids, str) else list(ids)
        x = self.left.leaves(ids)
        out = []
        for u, v in self.pairs:
            ls = self.left.leaves(u)
            if ls <= x:
                out.extend(v)
            elif ls & x:
                raise ValueError(f"{ids} is not in the domain of the partial isomorphism")
        return self.right.canonical(out)

    def to_json(self) -> dict:
        return {
            "pairs": [
                {"left": list(u), "right": list(v), "mu": format_vector(self.left.measure(u))}
                for u, v in self.pairs
            ],
        }


def _same_named(left: LimitChain, right: LimitChain, ids, inside, want) -> Optional[frozenset]:
    if not all(a in right for a in ids):
        return None
    ls = right.leaves(ids)
    if ls <= inside and right.measure(ls) == want:
        return ls
    return None


def back_and_forth_extend(M: LimitChain, N: LimitChain, p: Optional[PartialIso], target: str,
                          side: str = "left", stage_budget: int = DEFAULT_STAGE_BUDGET,
                          strategy: str = "sparse") -> PartialIso:
    """Extend ``p`` so that ``target`` (an atom of M, or of N when side="right") is covered.

    Splits missing from the receiving chain are realized by appending one
    stage; the returned partial isomorphism refers to the grown chains.
    Among existing realizations, a piece with the very same atom ids is
    preferred, then the first subset in atom order.
    """
    if p is None:
        p = PartialIso.empty(M, N)
    if side == "right":
        return back_and_forth_extend(N, M, p.inverse(), target, "left", stage_budget,
                                     strategy).inverse()
    if side != "left":
        raise ValueError("side must be 'left' or 'right'")
    M, N = p.left, p.right
    X = M.leaves([target])
    kept: List[Tuple[Tuple[str, ...], Tuple[str, ...]]] = []
    pending = []
    for u, v in p.pairs:
        ul = M.leaves(u)
        inn, out = ul & X, ul - X
        if not inn or not out:
            kept.append((u, v))
            continue
        want = M.measure(inn)
        vl = N.leaves(v)
        found = _same_named(M, N, inn, vl, want)
        if found is None:
            hit = find_subset(leaf_items(N, v), want)
            found = frozenset(hit) if hit is not None else None
        if found is not None:
            kept.append((tuple(M.canonical(inn)), tuple(N.canonical(found))))
            kept.append((tuple(M.canonical(out)), tuple(N.canonical(vl - found))))
        else:
            pending.append((inn, out, v))
    if pending:
        if stage_budget <= 0:
            raise BudgetExhausted(f"cannot realize the image of {target} without a new stage")
        task = split_task(N, [v for _, _, v in pending],
                          [[M.measure(inn), M.measure(out)] for inn, out, _ in pending],
                          "back-and-forth")
        N = one_point_extension(N, task, strategy)
        pieces = piece_witness(N, len(pending), [2] * len(pending))
        for (inn, out, _), (a, b) in zip(pending, pieces):
            kept.append((tuple(M.canonical(inn)), tuple(N.canonical(a))))
            kept.append((tuple(M.canonical(out)), tuple(N.canonical(b))))
    kept.sort()
    return PartialIso(M, N, tuple(kept))


def match_enumerated(M: LimitChain, N: LimitChain, count: int,
                     p: Optional[PartialIso] = None,
                     stage_budget: int = DEFAULT_STAGE_BUDGET,
                     strategy: str = "sparse") -> PartialIso:
    """Alternate forth and back over the first ``count`` enumerated atoms of each chain."""
    left_atoms = M.enumerate_atoms()[:count]
    right_atoms = N.enumerate_atoms()[:count]
    p = p if p is not None else PartialIso.empty(M, N)
    budget = stage_budget
    for i in range(max(len(left_atoms), len(right_atoms))):
        for side, atoms in (("left", left_atoms), ("right", right_atoms)):
            if i >= len(atoms):
                continue
            before = p.left.depth + p.right.depth
            p = back_and_forth_extend(p.left, p.right, p, atoms[i], side, budget, strategy)
            budget -= p.left.depth + p.right.depth - before
    return p


def homogeneity_automorphism(chain: LimitChain, part_a: Sequence[Iterable[str]],
                             part_b: Sequence[Iterable[str]]) -> PartialIso:
    """Germ of an automorphism sending each ``part_a[i]`` onto ``part_b[i]``.

    Both arguments must be clopen partitions of the chain with equal measure
    vectors piece by piece; the germ can be grown with
    :func:`back_and_forth_extend`.
    """
    if len(part_a) != len(part_b):
        raise HomogeneityError(-1, "partitions have different lengths")
    for name, part in (("first", part_a), ("second", part_b)):
        seen = set()
        for i, piece in enumerate(part):
            ls = chain.leaves(piece)
            if not ls:
                raise HomogeneityError(i, f"{name} partition: piece {i} is empty")
            if seen & ls:
                raise HomogeneityError(i, f"{name} partition: piece {i} overlaps another")
            seen |= ls
        if seen != set(chain.last.ids):
            raise HomogeneityError(-1, f"{name} partition does not cover the space")
    pairs = []
    for i, (a, b) in enumerate(zip(part_a, part_b)):
        ma, mb = chain.measure(a), chain.measure(b)
        if ma != mb:
            raise HomogeneityError(i, f"piece {i}: measure vectors differ ({format_vector(ma)} "
                                      f"vs {format_vector(mb)})")
        pairs.append((tuple(chain.canonical(a)), tuple(chain.canonical(b))))
    return PartialIso(chain, chain, tuple(pairs))
