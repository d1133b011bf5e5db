"""Seeded random instances shared by the test modules."""
from fractions import Fraction

from cantor_simplex.algebra import Embedding, FiniteMeasuredAlgebra


def positive_split(v, m, rng, spread=6):
    """Split ``v`` into ``m`` strictly positive vectors with exact random weights."""
    k = len(v)
    weights = [[rng.randint(1, spread) for _ in range(k)] for _ in range(m)]
    totals = [sum(w[e] for w in weights) for e in range(k)]
    return [tuple(v[e] * Fraction(w[e], totals[e]) for e in range(k)) for w in weights]


def random_algebra(k, n_atoms, rng, prefix="a"):
    pieces = positive_split((Fraction(1),) * k, n_atoms, rng)
    return FiniteMeasuredAlgebra(k, tuple((f"{prefix}{i}", v) for i, v in enumerate(pieces)))


def random_refinement(A, rng, max_atoms, prefix="b"):
    """An embedding of ``A`` into a random refinement with at most ``max_atoms`` atoms."""
    budget = max_atoms - len(A)
    atoms, blocks = [], {}
    for a, v in A.atoms:
        extra = rng.randint(0, budget)
        budget -= extra
        ids = []
        for j, piece in enumerate(positive_split(v, extra + 1, rng)):
            ids.append(f"{prefix}{a}.{j}")
            atoms.append((ids[-1], piece))
        blocks[a] = frozenset(ids)
    B = FiniteMeasuredAlgebra(A.k, tuple(atoms))
    return Embedding(A, B, blocks)
