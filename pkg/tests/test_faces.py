import random
from fractions import Fraction

import pytest

import oracles
from generators import positive_split
from cantor_simplex.algebra import validate
from cantor_simplex.chain import build_limit, chain_to_json, split_task
from cantor_simplex.faces import (
    discharge_restricted,
    extend_with_bounds,
    face_extension_decompose,
    limit_isomorphism_h,
    restricted_limit,
)
from cantor_simplex.vectors import vec, vsum


def test_extend_with_bounds_examples():
    f1, f2 = vec("1/4", "1/4", "1/4"), vec("3/4", "3/4", "3/4")
    assert extend_with_bounds([0, 1], ["1/3", "1/2"], f1, f2) == vec("1/3", "1/2", "1/2")
    assert extend_with_bounds([0, 1, 2], ["1/3", "1/2", "1/4"], f1, f2) == \
        vec("1/3", "1/2", "1/4")
    assert extend_with_bounds([0], ["1/3"], f1, vec("1/3", "1/4", "1/4")) == \
        vec("1/3", "1/4", "1/4")


def test_extend_with_bounds_checks_the_interval():
    with pytest.raises(ValueError):
        extend_with_bounds([0], ["1"], vec(0, 0), vec("1/2", "1/2"))
    with pytest.raises(ValueError):
        extend_with_bounds([0], ["0"], vec("1/2", 0), vec(0, 1))


def test_decompose_examples():
    f = vec(1, 1)
    assert face_extension_decompose(f, [0], [["1"]]) == [f]
    assert face_extension_decompose(f, [0], [["1/2"], ["1/2"]]) == [vec("1/2", "1/2")] * 2
    parts = [["1/3", "1/4"], ["2/3", "3/4"]]
    assert face_extension_decompose(f, [0, 1], parts) == [vec(*p) for p in parts]


def test_decompose_rejects_bad_parts():
    with pytest.raises(ValueError):
        face_extension_decompose(vec(1, 1), [0], [["1/2"], ["1/3"]])
    with pytest.raises(ValueError):
        face_extension_decompose(vec(1, 1), [0], [["1"], ["0"]])
    with pytest.raises(ValueError):
        face_extension_decompose(vec(1, 1), [2], [["1"]])


def test_random_decompositions():
    rng = random.Random(17)
    for _ in range(100):
        k = rng.randint(1, 4)
        R = sorted(rng.sample(range(k), rng.randint(1, k)))
        f = tuple(Fraction(rng.randint(1, 9), 9) for _ in range(k))
        parts = positive_split(tuple(f[e] for e in R), rng.randint(1, 5), rng)
        out = face_extension_decompose(f, R, parts)
        assert vsum(out, k) == f
        assert [tuple(g[e] for e in R) for g in out] == parts
        assert all(x > 0 for g in out for x in g)


def test_restricted_limit_examples():
    chain = build_limit(2, 8, 4, seed=0)
    same = restricted_limit(chain, [0, 1])
    assert chain_to_json(same)["stages"] == chain_to_json(chain)["stages"]
    small = restricted_limit(chain, [0])
    assert small.k == 1 and small.check() == []
    assert all(validate(s).valid for s in small.stages)


def test_restricted_task_is_discharged_in_the_full_chain():
    chain = build_limit(2, 6, 3, seed=1)
    small = restricted_limit(chain, [1])
    atom = small.last.ids[0]
    v = small.vector(atom)
    task = split_task(small, [[atom]], [[(v[0] / 3,), (2 * v[0] / 3,)]])
    grown, ok = discharge_restricted(chain, [1], task)
    assert ok
    assert grown.depth == chain.depth + 1
    assert grown.check() == []


def test_identity_permutation_gives_identity_germ():
    chain = build_limit(2, 6, 4, seed=0)
    p, report = limit_isomorphism_h(chain, [0, 1])
    assert report["ok"]
    assert all(row["image"] == [row["atom"]] for row in report["atoms"])


def test_cyclic_permutation_pushforward():
    chain = build_limit(3, 8, 4, seed=0)
    g = [1, 2, 0]
    p, report = limit_isomorphism_h(chain, g, count=12)
    assert report["ok"] and report["matched"] == 12
    N = p.right
    for row in report["atoms"]:
        mu = chain.vector(row["atom"])
        nu = N.measure(row["image"])
        # nu is read in the copy whose vertex q carries mu_{g(q)}
        pushed = [None] * 3
        for q in range(3):
            pushed[g[q]] = nu[q]
        assert oracles.pushforward_holds(mu, pushed, g)


def test_non_injective_vertex_map_is_refused():
    chain = build_limit(2, 4, 2)
    with pytest.raises(ValueError):
        limit_isomorphism_h(chain, [0, 0])
    with pytest.raises(ValueError):
        limit_isomorphism_h(chain, [0, 2])
