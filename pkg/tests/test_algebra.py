from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cantor_simplex.algebra import (
    Embedding,
    FiniteMeasuredAlgebra,
    algebra_from_json,
    algebra_to_json,
    compose,
    embedding_from_json,
    embedding_to_json,
    identity_embedding,
    is_embedding,
    isomorphic,
    restrict_embedding,
    restrict_to_face,
    trivial_algebra,
    validate,
)
from cantor_simplex.vectors import format_rational, parse_rational, vec

H, Q = Fraction(1, 2), Fraction(1, 4)


def alg(**atoms):
    return FiniteMeasuredAlgebra.from_atoms({a: v for a, v in atoms.items()})


def test_parse_rational_accepts_fractions_and_ints():
    assert parse_rational("3/9") == Fraction(1, 3)
    assert parse_rational(2) == 2
    assert format_rational(Fraction(2, 4)) == "1/2"


@pytest.mark.parametrize("bad", ["0.5", "1e-3", "", "x", 0.5, True, "1/0"])
def test_parse_rational_refuses(bad):
    with pytest.raises(ValueError):
        parse_rational(bad)


def test_validate_accepts_probability_vectors():
    assert validate(alg(x=["1/2", "1/3"], y=["1/2", "2/3"])).valid
    assert validate(trivial_algebra(3)).valid


def test_validate_lists_every_violation():
    rep = validate(alg(x=["0", "1/2"], y=["1", "1/3"]))
    assert not rep.valid
    text = " ".join(rep.violations)
    assert "not positive" in text
    assert "sums to 5/6" in text


def test_constructor_rejects_duplicates_and_wrong_length():
    with pytest.raises(ValueError):
        FiniteMeasuredAlgebra(1, (("a", (H,)), ("a", (H,))))
    with pytest.raises(ValueError):
        FiniteMeasuredAlgebra(2, (("a", (H,)),))


def test_embedding_check_reports_the_first_problem():
    A = alg(x=[H], y=[H])
    B = alg(p=[Q], q=[Q], r=[H])
    ok, why = is_embedding(Embedding(A, B, {"x": {"p", "q"}, "y": {"r"}}))
    assert ok and why is None
    ok, why = is_embedding(Embedding(A, B, {"x": {"p"}, "y": {"r"}}))
    assert not ok and "not covered" in why
    ok, why = is_embedding(Embedding(A, B, {"x": {"p", "r"}, "y": {"q"}}))
    assert not ok and "measure" in why
    ok, why = is_embedding(Embedding(A, B, {"x": {"p", "q"}, "y": {"q", "r"}}))
    assert not ok and "both" in why


def test_is_embedding_agrees_with_exhaustive_search():
    A = alg(x=["1/2", "1/3"], y=["1/2", "2/3"])
    B = alg(p=["1/4", "1/6"], q=["1/4", "1/6"], r=["1/4", "1/3"], s=["1/4", "1/3"])
    maps = oracles.embeddings(list(A.atoms), list(B.atoms))
    assert maps == [{"x": frozenset({"p", "q"}), "y": frozenset({"r", "s"})}]
    assert is_embedding(Embedding(A, B, maps[0]))[0]


def test_compose_and_identity():
    A = trivial_algebra(1)
    B = alg(x=[H], y=[H])
    C = alg(p=[Q], q=[Q], r=[H])
    first = Embedding(A, B, {"r": {"x", "y"}})
    second = Embedding(B, C, {"x": {"p", "q"}, "y": {"r"}})
    both = compose(first, second)
    assert both.as_dict() == {"r": frozenset("pqr")}
    assert is_embedding(both)[0]
    assert compose(identity_embedding(B), second).as_dict() == second.as_dict()
    with pytest.raises(ValueError):
        compose(second, first)


def test_restrict_to_face_uses_zero_based_vertices():
    A = alg(x=["1/2", "1/3", "1/5"], y=["1/2", "2/3", "4/5"])
    F = restrict_to_face(A, [0, 2])
    assert F.k == 2
    assert F.vector("x") == vec("1/2", "1/5")
    with pytest.raises(ValueError):
        restrict_to_face(A, [0, 3])
    with pytest.raises(ValueError):
        restrict_to_face(A, [])


def test_restricted_embedding_stays_an_embedding():
    A = alg(x=["1/2", "1/3"], y=["1/2", "2/3"])
    B = alg(p=["1/4", "1/6"], q=["1/4", "1/6"], r=["1/2", "2/3"])
    e = Embedding(A, B, {"x": {"p", "q"}, "y": {"r"}})
    assert is_embedding(restrict_embedding(e, [1]))[0]


def test_isomorphic_ignores_names():
    assert isomorphic(alg(a=[Q], b=["3/4"]), alg(z=["3/4"], y=[Q]))
    assert not isomorphic(alg(a=[Q], b=["3/4"]), alg(a=[H], b=[H]))


def test_json_round_trip():
    A = alg(x=["1/2", "1/3"], y=["1/2", "2/3"])
    B = alg(p=["1/4", "1/6"], q=["1/4", "1/6"], r=["1/2", "2/3"])
    e = Embedding(A, B, {"x": {"p", "q"}, "y": {"r"}})
    assert algebra_from_json(algebra_to_json(A)) == A
    assert algebra_to_json(A)["atoms"][0] == {"id": "x", "mu": ["1/2", "1/3"]}
    back = embedding_from_json(embedding_to_json(e), A, B)
    assert back.as_dict() == e.as_dict()
    with pytest.raises(ValueError):
        algebra_from_json({"k": 1, "atoms": [{"id": "a", "mu": [0.5]}]})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=5), st.integers(1, 3))
def test_normalized_weights_are_valid(weights, k):
    total = sum(weights)
    A = FiniteMeasuredAlgebra(k, tuple((f"a{i}", (Fraction(w, total),) * k)
                                       for i, w in enumerate(weights)))
    assert validate(A).valid
    assert isomorphic(A, restrict_to_face(A, list(range(k))))
