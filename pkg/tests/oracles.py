"""Brute-force reference computations used by the tests.

Nothing here calls the set algebra of the package: clopen sets are
expanded to explicit words by prefix tests, swaps act on single words,
and measures are sums over those words.  The expected values frozen at the
bottom were produced by these functions and are checked against them in
``test_oracles.py``.
"""
from fractions import Fraction
from itertools import product


def words(depth):
    return ["".join(bits) for bits in product("01", repeat=depth)]


def expand(prefixes, depth):
    """Words of length ``depth`` extending one of ``prefixes``."""
    prefixes = list(prefixes)
    return {w for w in words(depth) if any(w.startswith(p) for p in prefixes)}


def word_measure(w, p=Fraction(1, 2)):
    ones = w.count("1")
    return p ** ones * (1 - p) ** (len(w) - ones)


def measure(prefixes, p=Fraction(1, 2)):
    """Bernoulli(p) measure of a union of cylinders given by any prefix list."""
    prefixes = sorted(set(prefixes), key=len)
    kept = []
    for w in prefixes:
        if not any(w.startswith(q) for q in kept):
            kept.append(w)
    return sum((word_measure(w, p) for w in kept), Fraction(0))


def swap_point(u, v, x):
    """Image of a finite word ``x`` (longer than ``u``) under the swap [u] <-> [v]."""
    if x.startswith(u):
        return v + x[len(u):]
    if x.startswith(v):
        return u + x[len(v):]
    return x


def apply_word(swaps, word, x):
    """Apply a group word (rightmost letter first) to the point ``x``."""
    for idx, _ in reversed(word):
        u, v = swaps[idx]
        x = swap_point(u, v, x)
    return x


def marginals(matrix):
    """Row sums and column sums of a matrix of vectors, coordinate by coordinate."""
    rows = [tuple(sum(col) for col in zip(*row)) for row in matrix]
    cols = [tuple(sum(col) for col in zip(*[row[j] for row in matrix]))
            for j in range(len(matrix[0]))]
    return rows, cols


def embeddings(source, target):
    """Every block map from ``source`` into ``target`` preserving measure vectors.

    Both arguments are lists of ``(id, vector)``; the result lists dicts
    ``source id -> frozenset of target ids``.  Exhaustive: each target atom is
    assigned to some source atom.
    """
    out = []
    for choice in product(range(len(source)), repeat=len(target)):
        blocks = {a: set() for a, _ in source}
        for t, s in zip(target, choice):
            blocks[source[s][0]].add(t[0])
        ok = True
        for a, v in source:
            total = tuple(sum(col) for col in zip(*[dict(target)[b] for b in blocks[a]])) \
                if blocks[a] else None
            if total != tuple(v):
                ok = False
                break
        if ok:
            out.append({a: frozenset(b) for a, b in blocks.items()})
    return out


def division_measure(heights, base_measures, n):
    """Measure of B_0 when column i has ``heights[i] + 1`` levels of measure ``base_measures[i]``.

    B_0 takes levels 0, n, 2n, ... of each column, stopping before the
    incomplete block of fewer than n levels at the top.
    """
    total = Fraction(0)
    for h, m in zip(heights, base_measures):
        total += ((h + 1) // n) * m
    return total


def pushforward_holds(before, after, g):
    """``after[g(q)] == before[q]`` at every vertex ``q``.

    ``before`` is the vector of U, ``after`` the vector of h(U), both indexed
    by the original vertex labels.
    """
    return all(after[g[q]] == before[q] for q in range(len(g)))


def algebras(k, d):
    """Every multiset of positive vectors with denominators <= d summing to 1 per vertex.

    Each algebra is a sorted tuple of vectors, listed once.
    """
    values = sorted({Fraction(p, q) for q in range(1, d + 1) for p in range(1, q + 1)})
    vectors = sorted(product(values, repeat=k))
    out = []

    def rec(start, rest, acc):
        if all(x == 0 for x in rest):
            out.append(tuple(acc))
            return
        for i in range(start, len(vectors)):
            v = vectors[i]
            if all(a <= b for a, b in zip(v, rest)):
                acc.append(v)
                rec(i, tuple(b - a for a, b in zip(v, rest)), acc)
                acc.pop()

    rec(0, (Fraction(1),) * k, [])
    return out


def assign(items, targets):
    """Split ``items`` (``(id, vector)`` pairs) into groups summing to each target.

    Items are tried in the given order; returns the groups as id lists, or
    None when no split exists.
    """
    left = [tuple(t) for t in targets]
    groups = [[] for _ in targets]

    def rec(i):
        if i == len(items):
            return all(all(x == 0 for x in t) for t in left)
        name, v = items[i]
        tried = set()
        for j, t in enumerate(left):
            if t in tried or not all(a <= b for a, b in zip(v, t)):
                continue
            tried.add(t)
            left[j] = tuple(b - a for a, b in zip(v, t))
            groups[j].append(name)
            if rec(i + 1):
                return True
            groups[j].pop()
            left[j] = t
        return False

    if len(items) < len(targets) or not rec(0):
        return None
    return groups


def groupable(items, targets):
    """Can ``items`` (vectors) be split into groups summing to each of ``targets``?"""
    ordered = sorted(items, reverse=True)
    return assign([(i, v) for i, v in enumerate(ordered)], targets) is not None


def partition_problems(doc, expected, depth):
    """Brute-force check of a serialized dividing partition.

    ``doc`` is the ``partition.v1`` document, ``expected`` the prefixes of the
    set it should cover.  Every level is recomputed point by point from the
    base and the witness word; levels must be pairwise disjoint, columns
    must have at least N witnesses, and the levels must make up ``expected``.
    """
    swaps = [tuple(s) for s in doc["generators"]]
    problems = []
    seen = set()
    for i, col in enumerate(doc["columns"]):
        if len(col["witnesses"]) < doc["N"]:
            problems.append(f"column {i} is too short")
        base = expand(col["base"], depth)
        if not base:
            problems.append(f"column {i} has an empty base")
        for word in [[]] + col["witnesses"]:
            level = {apply_word(swaps, [tuple(l) for l in word], x) for x in base}
            if level & seen:
                problems.append(f"column {i} overlaps an earlier level")
            seen |= level
    if seen != expand(expected, depth):
        problems.append("levels do not make up the expected set")
    return problems


# -- frozen values ---------------------------------------------------------------

# measure of the clopen {0, 10, 110} under p = 1/2, 1/3, 2/5
FROZEN_MEASURES = {
    Fraction(1, 2): Fraction(7, 8),
    Fraction(1, 3): Fraction(26, 27),
    Fraction(2, 5): Fraction(117, 125),
}

# one column of 8 depth-3 cylinders, n = 3: mu(B_0), gap, (n-1)/N
FROZEN_WORKED_EXAMPLE = {
    "B0": ("000", "011"),
    "mu_B0": Fraction(1, 4),
    "gap": Fraction(1, 4),
    "bound": Fraction(2, 7),
}

# all measure-preserving block maps of (1/2, 1/2) into (1/4, 1/4, 1/2)
FROZEN_EMBEDDING_COUNT = 2

# the swap [00] <-> [11] on the point 0010
FROZEN_SWAP = ("0010", "1110")

# number of algebras with denominators <= d, keyed by (k, d)
FROZEN_ALGEBRA_COUNTS = {(1, 2): 2, (1, 3): 4, (2, 2): 2, (2, 3): 7}
