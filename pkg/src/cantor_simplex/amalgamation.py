"""Amalgamation of measured algebras through exact couplings.

Given ``alpha: A -> B`` and ``beta: A -> C`` the amalgam ``D`` has one atom
``b (x) c`` for each pair of atoms lying over the same atom of ``A``.  The
measure of that atom is an entry of a coupling of the two decompositions of
the common parent, i.e. a point of a transportation polytope whose entries
are measure vectors.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .algebra import Embedding, FiniteMeasuredAlgebra, compose, is_embedding, validate
from .vectors import Vector, is_positive, is_zero, lt, sub, vsum, zeros

STRATEGIES = ("product", "northwest", "sparse")
PAIR_SEP = "⊗"


class MarginalMismatch(ValueError):
    pass


class AmalgamationError(ValueError):
    pass


def _check_marginals(f: Vector, rows: Sequence[Vector], cols: Sequence[Vector]):
    k = len(f)
    for name, group in (("row", rows), ("column", cols)):
        if not group:
            raise MarginalMismatch(f"no {name} marginals given")
        for i, v in enumerate(group):
            if len(v) != k:
                raise MarginalMismatch(f"{name} {i} has length {len(v)}, expected {k}")
            if not is_positive(v):
                raise MarginalMismatch(f"{name} {i} is not strictly positive")
        total = vsum(group, k)
        if total != tuple(f):
            raise MarginalMismatch(f"{name} marginals sum to {total}, expected {tuple(f)}")
    if not is_positive(f):
        raise MarginalMismatch("decomposed vector is not strictly positive")


def _product(f, rows, cols):
    return [[tuple(r[e] * c[e] / f[e] for e in range(len(f))) for c in cols] for r in rows]


def _northwest_scalar(supply: List[Fraction], demand: List[Fraction]) -> List[List[Fraction]]:
    supply, demand = list(supply), list(demand)
    out = [[Fraction(0)] * len(demand) for _ in supply]
    i = j = 0
    while i < len(supply) and j < len(demand):
        q = min(supply[i], demand[j])
        out[i][j] = q
        supply[i] -= q
        demand[j] -= q
        if supply[i] == 0:
            i += 1
        if demand[j] == 0:
            j += 1
    return out


def _northwest(f, rows, cols):
    k = len(f)
    per_coord = [_northwest_scalar([r[e] for r in rows], [c[e] for c in cols]) for e in range(k)]
    return [[tuple(per_coord[e][i][j] for e in range(k)) for j in range(len(cols))]
            for i in range(len(rows))]


def _sparse(f, rows, cols):
    # Column by column: whole rows while they fit, then one row that strictly
    # dominates the remaining need, else a proportional cut of the fewest rows
    # whose total strictly dominates it.  Every remaining row stays either
    # zero or strictly positive, so every entry is zero or strictly positive.
    k = len(f)
    remaining = [tuple(r) for r in rows]
    h = [[zeros(k) for _ in cols] for _ in rows]
    for j, col in enumerate(cols):
        if j == len(cols) - 1:
            for i, r in enumerate(remaining):
                if not is_zero(r):
                    h[i][j] = r
                    remaining[i] = zeros(k)
            break
        need = tuple(col)
        for i, r in enumerate(remaining):
            if is_zero(r) or is_zero(need):
                continue
            rest = sub(need, r)
            if is_zero(rest) or is_positive(rest):
                h[i][j] = r
                remaining[i] = zeros(k)
                need = rest
        if is_zero(need):
            continue
        dominating = next((i for i, r in enumerate(remaining) if lt(need, r)), None)
        if dominating is not None:
            h[dominating][j] = need
            remaining[dominating] = sub(remaining[dominating], need)
            continue
        chosen, total = [], zeros(k)
        for i, r in enumerate(remaining):
            if is_zero(r):
                continue
            chosen.append(i)
            total = tuple(a + b for a, b in zip(total, r))
            if lt(need, total):
                break
        else:
            raise AmalgamationError("remaining rows cannot cover a column")  # pragma: no cover
        for i in chosen:
            part = tuple(remaining[i][e] * need[e] / total[e] for e in range(k))
            h[i][j] = part
            remaining[i] = sub(remaining[i], part)
    return h


def riesz_decompose(f: Vector, rows: Sequence[Vector], cols: Sequence[Vector],
                    strategy: str = "product") -> List[List[Vector]]:
    """Matrix ``h`` of vectors with row sums ``rows`` and column sums ``cols``.

    ``product`` sets ``h[j][k][e] = rows[j][e] * cols[k][e] / f[e]`` and is
    strictly positive.  ``northwest`` runs the corner rule on each coordinate
    separately, so entries may vanish at some coordinates only.  ``sparse``
    keeps every entry either zero or strictly positive while splitting few
    rows; it is what the limit builder uses to keep stages small.
    """
    f = tuple(f)
    rows = [tuple(r) for r in rows]
    cols = [tuple(c) for c in cols]
    _check_marginals(f, rows, cols)
    if strategy == "product":
        return _product(f, rows, cols)
    if strategy == "northwest":
        return _northwest(f, rows, cols)
    if strategy == "sparse":
        return _sparse(f, rows, cols)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def pair_id(b: str, c: str) -> str:
    return f"{b}{PAIR_SEP}{c}"


def amalgamate(alpha: Embedding, beta: Embedding, strategy: str = "product"
               ) -> Tuple[FiniteMeasuredAlgebra, Embedding, Embedding]:
    """Amalgam ``D`` of ``alpha: A -> B`` and ``beta: A -> C`` over ``A``.

    Returns ``(D, alpha', beta')`` with ``alpha' o alpha == beta' o beta``.
    Atoms that vanish at every coordinate are dropped; an atom vanishing at
    only some coordinates is not a member of the class and raises.
    """
    if alpha.source != beta.source:
        raise AmalgamationError("embeddings have different sources")
    for name, e in (("alpha", alpha), ("beta", beta)):
        ok, why = is_embedding(e)
        if not ok:
            raise AmalgamationError(f"{name} is not an embedding: {why}")
    A, B, C = alpha.source, alpha.target, beta.target
    a_blocks, b_blocks = alpha.as_dict(), beta.as_dict()
    atoms: List[Tuple[str, Vector]] = []
    left: Dict[str, set] = {b: set() for b in B.ids}
    right: Dict[str, set] = {c: set() for c in C.ids}
    for a in A.ids:
        J = sorted(a_blocks[a])
        K = sorted(b_blocks[a])
        h = riesz_decompose(A.vector(a), [B.vector(b) for b in J], [C.vector(c) for c in K],
                            strategy)
        for j, b in enumerate(J):
            for kk, c in enumerate(K):
                v = h[j][kk]
                if is_zero(v):
                    continue
                if not is_positive(v):
                    raise AmalgamationError(
                        f"{strategy} coupling gives atom {pair_id(b, c)} a zero coordinate"
                    )
                d = pair_id(b, c)
                atoms.append((d, v))
                left[b].add(d)
                right[c].add(d)
    D = FiniteMeasuredAlgebra(A.k, tuple(atoms))
    return D, Embedding(B, D, left), Embedding(C, D, right)


def amalgam_checks(alpha: Embedding, beta: Embedding, D: FiniteMeasuredAlgebra,
                   alpha2: Embedding, beta2: Embedding) -> List[Tuple[str, bool, str]]:
    """Machine-checkable verdicts for an amalgamation square."""
    checks = []
    ok, why = is_embedding(alpha2)
    checks.append(("alpha_prime_is_embedding", ok, why or "row marginals exact"))
    ok, why = is_embedding(beta2)
    checks.append(("beta_prime_is_embedding", ok, why or "column marginals exact"))
    report = validate(D)
    checks.append(("amalgam_valid", report.valid, "; ".join(report.violations) or "valid"))
    left = compose(alpha, alpha2).as_dict()
    right = compose(beta, beta2).as_dict()
    same = left == right
    checks.append(("square_commutes", same,
                   "alpha' o alpha == beta' o beta" if same else "block maps differ"))
    checks.append(("strict_positivity", all(is_positive(v) for v in D.vectors()),
                   "every amalgam atom strictly positive"))
    return checks
