"""Witnesses for the dynamical-simplex conditions on a chain.

Three conditions are checked on every atom (and pair of atoms) whose values
have denominators within a bound:

* positivity: each atom has positive measure at every vertex;
* subdivision: each atom splits into pieces of measure at most ``eps``;
* Glasner-Weiss: if ``mu(a) < mu(b)`` at every vertex, some clopen inside
  ``b`` has exactly the measure vector of ``a``.

Separation witnesses show that distinct vertices give distinct measures.
Witnesses are first searched among atoms already in the chain; missing ones
are obtained by discharging Fraisse tasks on a working copy, within a stage
budget.  Nothing is ever reported as verified without an explicit witness.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Dict, List, Sequence, Tuple

from .algebra import FiniteMeasuredAlgebra
from .backforth import back_and_forth_extend, homogeneity_automorphism
from .chain import (
    BudgetExhausted,
    LimitChain,
    find_partition,
    find_subset,
    leaf_items,
    realize_split,
)
from .vectors import (
    Vector,
    format_rational,
    format_vector,
    is_positive,
    lt,
    max_denominator,
    ones,
    parse_rational,
    scale,
    sub,
)

CERT_SCHEMA = "cert.v1"
VERIFIED, INCOMPLETE, FAILED = "VERIFIED", "INCOMPLETE", "FAILED"
DEFAULT_VERIFY_BUDGET = 256


@dataclass(frozen=True)
class PositivityReport:
    per_atom: Tuple[Tuple[str, Fraction], ...]
    minimum: Fraction

    @property
    def ok(self) -> bool:
        return self.minimum > 0


def check_positivity(algebra: FiniteMeasuredAlgebra) -> PositivityReport:
    per_atom = tuple((a, min(v)) for a, v in algebra.atoms)
    return PositivityReport(per_atom, min(m for _, m in per_atom))


def epsilon_subdivide(a: Sequence, eps) -> List[Vector]:
    """Split ``a`` into ``ceil(max(a) / eps)`` equal pieces."""
    a = tuple(parse_rational(x) for x in a)
    eps = parse_rational(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not is_positive(a) or any(x > 1 for x in a):
        raise ValueError("vector must lie in (0, 1] at every vertex")
    n = max(1, ceil(max(a) / eps))
    piece = scale(a, Fraction(1, n))
    return [piece] * n


@dataclass(frozen=True)
class GlasnerWeissWitness:
    algebra: FiniteMeasuredAlgebra
    inner: str
    outer: Tuple[str, ...]


class GapError(ValueError):
    def __init__(self, vertex: int, message: str):
        super().__init__(message)
        self.vertex = vertex


def glasner_weiss_witness(a: Sequence, b: Sequence) -> GlasnerWeissWitness:
    """Algebra with atoms ``a'``, ``b' - a'`` and the complement of ``b'``.

    ``inner`` names ``a'`` and ``outer`` lists the atoms making up ``b'``.
    The complement is left out when ``b`` is the unit.
    """
    a = tuple(parse_rational(x) for x in a)
    b = tuple(parse_rational(x) for x in b)
    if len(a) != len(b):
        raise ValueError("vectors have different lengths")
    for e, (x, y) in enumerate(zip(a, b)):
        if not 0 < x < y:
            raise GapError(e, f"no strict gap at vertex {e}: a={format_rational(x)}, "
                              f"b={format_rational(y)}")
        if y > 1:
            raise GapError(e, f"b exceeds 1 at vertex {e}")
    k = len(a)
    atoms = [("a", a), ("b-a", sub(b, a))]
    if b != ones(k):
        rest = sub(ones(k), b)
        if not is_positive(rest):
            e = next(i for i, x in enumerate(rest) if x <= 0)
            raise GapError(e, f"b equals 1 at vertex {e} but not everywhere")
        atoms.append(("1-b", rest))
    return GlasnerWeissWitness(FiniteMeasuredAlgebra(k, tuple(atoms)), "a", ("a", "b-a"))


def exact_divide(chain: LimitChain, U: Sequence[str], n: int,
                 stage_budget: int = DEFAULT_VERIFY_BUDGET,
                 strategy: str = "sparse") -> Tuple[LimitChain, List[str]]:
    """Clopen ``B`` inside ``U`` with ``n * mu(B) == mu(U)``.

    Returns the (possibly extended) chain and the atoms of ``B``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    U = list(U)
    if n == 1:
        return chain, sorted(chain.leaves(U))
    part = scale(chain.measure(U), Fraction(1, n))
    hit = find_subset(leaf_items(chain, U), part)
    if hit is not None:
        return chain, hit
    chain, groups = realize_split(chain, U, [part] * n, "divide", [stage_budget], strategy)
    return chain, groups[0]


# -- the certificate ---------------------------------------------------------

class _Work:
    """Working copy of the chain plus the stage budget for discharged tasks."""

    def __init__(self, chain: LimitChain, budget: int, strategy: str):
        self.chain = chain
        self.budget = [budget]
        self.strategy = strategy
        self.discharged = 0

    def split(self, clopen, pieces, origin):
        before = self.chain.depth
        self.chain, groups = realize_split(self.chain, clopen, pieces, origin, self.budget,
                                           self.strategy)
        self.discharged += self.chain.depth - before
        return groups


def _transport(work: _Work, donor: str, atom: str, donor_pieces: List[List[str]]
               ) -> List[List[str]]:
    """Move a partition of ``donor`` onto ``atom`` along a homogeneity germ."""
    everything = set(work.chain.last.ids)
    p = homogeneity_automorphism(
        work.chain,
        [[donor], sorted(everything - work.chain.leaves([donor]))],
        [[atom], sorted(everything - work.chain.leaves([atom]))],
    )
    for leaf in sorted(work.chain.leaves([donor])):
        before = p.right.depth
        p = back_and_forth_extend(p.left, p.right, p, leaf, "left", work.budget[0],
                                  work.strategy)
        used = p.right.depth - before
        work.budget[0] -= used
        work.discharged += used
    work.chain = p.right
    return [p.image(piece) for piece in donor_pieces]


def _subdivision(work: _Work, atoms: List[str], by_vector: Dict[Vector, List[str]],
                 eps: Fraction) -> List[dict]:
    out = []
    for atom in atoms:
        v = work.chain.vector(atom)
        pieces = epsilon_subdivide(v, eps)
        entry = {"atom": atom, "mu": format_vector(v), "n": len(pieces),
                 "piece": format_vector(pieces[0])}
        out.append(entry)
        if len(pieces) == 1:
            entry.update(placed="self", pieces=[[atom]])
            continue
        found = find_partition(leaf_items(work.chain, [atom]), pieces)
        if found is not None:
            entry.update(placed="self", pieces=found)
            continue
        for other in by_vector[v]:
            if other == atom:
                continue
            donor_pieces = find_partition(leaf_items(work.chain, [other]), pieces)
            if donor_pieces is not None:
                entry.update(placed="homogeneity", donor=other,
                             pieces=_transport(work, other, atom, donor_pieces))
                break
        else:
            entry.update(placed="task", pieces=work.split([atom], pieces, "subdivision"))
    return out


def _glasner_weiss(work: _Work, reps: Dict[Vector, str]) -> List[dict]:
    out = []
    vectors = sorted(reps)
    for va in vectors:
        for vb in vectors:
            if not lt(va, vb):
                continue
            glasner_weiss_witness(va, vb)
            b = reps[vb]
            entry = {"a": reps[va], "b": b, "mu_a": format_vector(va), "mu_b": format_vector(vb)}
            hit = find_subset(leaf_items(work.chain, [b]), va)
            if hit is not None:
                entry.update(placed="self", inner=hit)
            else:
                entry.update(placed="task",
                             inner=work.split([b], [va, sub(vb, va)], "glasner-weiss")[0])
            out.append(entry)
    return out


def _separation(chain: LimitChain) -> Tuple[List[dict], List[List[int]]]:
    found, missing = [], []
    atoms = chain.enumerate_atoms()
    for e in range(chain.k):
        for f in range(e + 1, chain.k):
            hit = next((a for a in atoms if chain.vector(a)[e] != chain.vector(a)[f]), None)
            if hit is None:
                missing.append([e, f])
            else:
                found.append({"vertices": [e, f], "atom": hit,
                              "mu": format_vector(chain.vector(hit))})
    return found, missing


def _recheck(chain: LimitChain, eps: Fraction, sub_w: List[dict], gw_w: List[dict]) -> List[str]:
    """Independent re-verification of every witness against the final chain."""
    errors = []
    for w in sub_w:
        whole = chain.leaves([w["atom"]])
        seen = set()
        piece = tuple(parse_rational(x) for x in w["piece"])
        for ids in w["pieces"]:
            ls = chain.leaves(ids)
            if seen & ls or not ls <= whole:
                errors.append(f"subdivision of {w['atom']}: pieces overlap or leave the atom")
            seen |= ls
            mu = chain.measure(ids)
            if mu != piece or max(mu) > eps:
                errors.append(f"subdivision of {w['atom']}: piece has measure "
                              f"{format_vector(mu)}")
        if seen != whole:
            errors.append(f"subdivision of {w['atom']}: pieces do not cover the atom")
    for w in gw_w:
        inner = chain.leaves(w["inner"])
        if not inner <= chain.leaves([w["b"]]):
            errors.append(f"witness for ({w['a']}, {w['b']}) is not inside {w['b']}")
        if chain.measure(w["inner"]) != chain.vector(w["a"]):
            errors.append(f"witness for ({w['a']}, {w['b']}) has the wrong measure")
    return errors


def verify_dynamical_simplex(chain: LimitChain, denom_bound: int,
                             stage_budget: int = DEFAULT_VERIFY_BUDGET,
                             strategy: str = "sparse") -> dict:
    """Certificate for the three conditions plus vertex separation.

    Status is VERIFIED when every witness was produced and re-checked,
    INCOMPLETE when the chain has no refinement yet, a separation witness
    is missing or the stage budget ran out, and FAILED when a check is
    violated outright.
    """
    if denom_bound < 1:
        raise ValueError("denominator bound must be at least 1")
    eps = Fraction(1, denom_bound)
    atoms = [a for a in chain.enumerate_atoms() if max_denominator(chain.vector(a)) <= denom_bound]
    by_vector: Dict[Vector, List[str]] = {}
    for a in atoms:
        by_vector.setdefault(chain.vector(a), []).append(a)
    reps = {v: ids[0] for v, ids in by_vector.items()}

    pos = check_positivity(FiniteMeasuredAlgebra(chain.k, tuple((a, chain.vector(a))
                                                                for a in atoms)))
    notes: List[str] = []
    status = VERIFIED
    work = _Work(chain, stage_budget, strategy)
    sub_w: List[dict] = []
    gw_w: List[dict] = []
    if chain.depth == 0:
        status = INCOMPLETE
        notes.append("chain has no refinement stage, so no witness can be read from it")
    else:
        try:
            sub_w = _subdivision(work, atoms, by_vector, eps)
            gw_w = _glasner_weiss(work, reps)
        except BudgetExhausted as exc:
            status = INCOMPLETE
            notes.append(f"stage budget exhausted: {exc}")
    separation, missing = _separation(chain)
    if missing:
        if status == VERIFIED:
            status = INCOMPLETE
        notes.append(f"no separating atom found for vertex pairs {missing}")
    errors = [] if status != VERIFIED else _recheck(work.chain, eps, sub_w, gw_w)
    if not pos.ok:
        errors.append("an atom has a non-positive coordinate")
    if errors:
        status = FAILED
        notes.extend(errors)
    return {
        "schema": CERT_SCHEMA,
        "kind": "dynamical-simplex",
        "k": chain.k,
        "denoms": denom_bound,
        "status": status,
        "atoms_checked": len(atoms),
        "positivity": {
            "ok": pos.ok,
            "minimum": format_rational(pos.minimum),
            "per_atom": [{"atom": a, "min": format_rational(m)} for a, m in pos.per_atom],
        },
        "subdivision": {"eps": format_rational(eps), "witnesses": sub_w},
        "glasner_weiss": {"witnesses": gw_w},
        "separation": {"witnesses": separation, "missing": missing},
        "discharged_stages": work.discharged,
        "final_depth": work.chain.depth,
        "notes": notes,
    }
