import random
from fractions import Fraction

import pytest

import oracles
from cantor_simplex.cantor import BernoulliMeasure, ClopenSet, GeneratorPool, cylinder_measure
from cantor_simplex.dividing import (
    CoverError,
    DividingPartition,
    PartitionError,
    add_on_top,
    approx_divide,
    choose_N,
    cover_clopen,
    divide_with_partition,
    empty_partition,
    make_column,
    merge_partitions,
    merge_single_column,
    partition_from_json,
    refine_column,
    single_column,
)

C = ClopenSet.of


def column_00(N=3):
    pool = GeneratorPool()
    words = [pool.letter("00", w) for w in ("01", "10", "11")]
    return single_column(N, pool, C("00"), words)


def test_single_column_levels():
    part = column_00()
    assert [lv.words for lv in part.columns[0].levels] == [("00",), ("01",), ("10",), ("11",)]
    assert part.covered == ClopenSet.full()
    assert part.problems() == []
    assert oracles.partition_problems(part.to_json(), [""], 4) == []


def test_single_column_rejects_overlap_and_short_columns():
    pool = GeneratorPool()
    with pytest.raises(PartitionError):
        single_column(2, pool, C("00"), [pool.letter("00", "01")])
    with pytest.raises(PartitionError):
        single_column(1, pool, C("0"), [pool.letter("00", "01")])


def test_refine_column_examples():
    part = column_00()
    assert refine_column(part, 0, [C("00")]).columns == part.columns
    split = refine_column(part, 0, [C("000"), C("001")])
    assert len(split.columns) == 2
    for col, tail in zip(split.columns, "01"):
        assert [lv.words for lv in col.levels] == [(w + tail,) for w in ("00", "01", "10", "11")]
    assert split.problems() == []
    with pytest.raises(PartitionError):
        refine_column(part, 0, [C("000")])


def test_add_on_top():
    pool = GeneratorPool()
    part = single_column(1, pool, C("00"), [pool.letter("00", "01")])
    g = pool.letter("01", "10")
    taller = add_on_top(part, 0, 1, C("10"), g)
    assert taller.columns[0].height == 2
    assert taller.problems() == []
    assert oracles.partition_problems(taller.to_json(), ["00", "01", "10"], 4) == []
    with pytest.raises(PartitionError):
        add_on_top(part, 0, 1, C("00"), pool.letter("01", "00"))
    with pytest.raises(PartitionError):
        add_on_top(part, 0, 1, C("11"), g)


def test_merge_single_column_disjoint_input():
    pool = GeneratorPool()
    part = single_column(1, pool, C("00"), [pool.letter("00", "01")])
    same, rest = merge_single_column(part, C("10"), [pool.letter("10", "11")])
    assert same is part and rest == C("10")


def test_merge_single_column_nested_input():
    part = column_00(1)
    pool = part.pool
    merged, rest = merge_single_column(part, C("000"), [pool.letter("000", "100")])
    assert not rest
    assert merged.covered == ClopenSet.full()
    assert oracles.partition_problems(merged.to_json(), [""], 5) == []


def test_merge_single_column_half_in_half_out():
    pool = GeneratorPool()
    part = single_column(1, pool, C("000"), [pool.letter("000", "001")])
    # base [010] maps onto [001] (inside A) and [011] (outside), so only part of it is absorbed
    merged, rest = merge_single_column(part, C("010"),
                                       [pool.letter("010", "001"), pool.letter("010", "011")])
    assert merged.problems() == []
    assert merged.covered.issubset(C("00", "01"))
    assert oracles.partition_problems(merged.to_json(), merged.covered.words, 5) == []


def test_merge_partitions_examples():
    pool = GeneratorPool()
    A = single_column(1, pool, C("0"), [pool.letter("0", "1")])
    B = single_column(1, pool, C("00"), [pool.letter("00", "01")])
    merged = merge_partitions(A, B)
    assert merged.covered == ClopenSet.full()
    assert oracles.partition_problems(merged.to_json(), [""], 4) == []
    left = single_column(1, pool, C("00"), [pool.letter("00", "01")])
    right = single_column(1, pool, C("10"), [pool.letter("10", "11")])
    both = merge_partitions(left, right)
    assert both.columns == left.columns + right.columns
    with pytest.raises(PartitionError):
        merge_partitions(left, column_00(2))


def test_merge_adopts_another_pool():
    p1, p2 = GeneratorPool(), GeneratorPool()
    A = single_column(1, p1, C("00"), [p1.letter("00", "01")])
    B = single_column(1, p2, C("01"), [p2.letter("01", "11")])
    merged = merge_partitions(A, B)
    assert merged.pool is p1
    assert oracles.partition_problems(merged.to_json(), ["0", "11"], 4) == []


def test_cover_examples():
    part = cover_clopen(C("0"), 2)
    (col,) = part.columns
    assert col.base == C("000")
    assert [lv.words for lv in col.levels[1:]] == [("001",), ("010",), ("011",)]
    part = cover_clopen(C("0"), 1)
    assert [lv.words for lv in part.columns[0].levels] == [("00",), ("01",)]
    part = cover_clopen(ClopenSet.full(), 7)
    assert len(part.columns) == 1 and part.columns[0].height == 7


def test_cover_errors():
    with pytest.raises(ValueError):
        cover_clopen(ClopenSet.empty(), 2)
    with pytest.raises(CoverError):
        cover_clopen(C("0"), 3, mode="weight")
    with pytest.raises(CoverError):
        cover_clopen(C("0101010101"), 2, word_budget=8)


def test_weight_cover_keeps_bernoulli_measures():
    band = ClopenSet(tuple(w for w in oracles.words(6) if 2 <= w.count("1") <= 4))
    part = cover_clopen(band, 9, mode="weight")
    assert part.pool.weight_preserving()
    assert oracles.partition_problems(part.to_json(), band.words, 6) == []
    for p in (Fraction(1, 3), Fraction(2, 5)):
        m = BernoulliMeasure(p)
        for col in part.columns:
            assert all(cylinder_measure(lv, m) == cylinder_measure(col.base, m)
                       for lv in col.levels)


def test_worked_example():
    ex = oracles.FROZEN_WORKED_EXAMPLE
    pool = GeneratorPool()
    words = oracles.words(3)
    part = single_column(7, pool, C(words[0]), [pool.letter(words[0], w) for w in words[1:]])
    B0, cert = divide_with_partition(part, 3, Fraction(2, 7))
    assert B0 == C(*ex["B0"])
    (m,) = cert["measures"]
    assert Fraction(m["mu_B0"]) == ex["mu_B0"]
    assert Fraction(m["gap"]) == ex["gap"]
    assert Fraction(m["bound"]) == ex["bound"]
    assert cert["column_pq"] == [[2, 2]]
    assert cert["status"] == "VERIFIED"


def test_n_equal_one_takes_everything():
    A = C("0", "10")
    B0, cert = approx_divide(A, 1, Fraction(1, 4))
    assert B0 == A
    assert cert["measures"][0]["gap"] == "0/1"


def test_choose_N():
    assert choose_N(3, Fraction(1, 5)) == 16
    assert choose_N(2, Fraction(1, 4)) == 9


def test_mode_all_refuses_other_measures():
    with pytest.raises(ValueError):
        approx_divide(C("0"), 2, Fraction(1, 4), measures=[Fraction(1, 3)])


def test_random_divisions_against_oracle():
    rng = random.Random(7)
    for _ in range(30):
        words = {"".join(rng.choice("01") for _ in range(rng.randint(1, 4)))
                 for _ in range(rng.randint(1, 4))}
        A = ClopenSet(tuple(words))
        n = rng.choice([2, 3, 5])
        eps = rng.choice([Fraction(1, 4), Fraction(1, 10)])
        B0, cert = approx_divide(A, n, eps)
        assert cert["status"] == "VERIFIED"
        mu_A, mu_B = oracles.measure(A.words), oracles.measure(B0.words)
        assert mu_A - eps <= n * mu_B <= mu_A
        assert oracles.expand(B0.words, 10) <= oracles.expand(A.words, 10)


def test_partition_json_round_trip():
    part = cover_clopen(C("0", "11"), 3)
    back = partition_from_json(part.to_json())
    assert back.to_json() == part.to_json()
    doc = part.to_json()
    doc["columns"][0]["base"] = ["1"]
    with pytest.raises(PartitionError):
        partition_from_json(doc)


def test_empty_partition_merges_to_the_other():
    pool = GeneratorPool()
    B = single_column(1, pool, C("00"), [pool.letter("00", "01")])
    assert merge_partitions(empty_partition(1, pool), B).columns == B.columns


def test_problems_name_overlapping_levels():
    pool = GeneratorPool()
    a = make_column(pool, C("00"), [pool.letter("00", "01")])
    b = make_column(pool, C("0"), [pool.letter("0", "1")])
    part = DividingPartition(1, C("0", "1"), (a, b), pool)
    assert any("meets an earlier set" in p for p in part.problems())
    short = DividingPartition(2, C("0"), (a,), pool)
    assert any("fewer than N=2" in p for p in short.problems())
