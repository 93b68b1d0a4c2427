from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from mpmath import mpf

from src.errors import FeasibilityError
from src.galois import field_of_order
from src.models import (
    BivariateDegreeDistribution,
    Construction,
    DegreeDistribution,
    LTColumn,
    RaptorInstance,
)
from src.services import bounds as bd
from src.services import outercodes as oc
from src.services import raptor

HALF = Fraction(1, 2)
OMEGA_SMALL = DegreeDistribution(((1, Fraction(1, 4)), (2, Fraction(1, 4)), (3, HALF)))


@pytest.fixture
def rng():
    return np.random.default_rng(11)


@pytest.fixture
def repetition_instance():
    gf2 = field_of_order(2)
    code = oc.code_from_generator(gf2, [[1, 1]])
    con = Construction("gfq", gf2, DegreeDistribution(((1, HALF), (2, HALF))), 2)
    return RaptorInstance(code, con)


@pytest.fixture
def identity_instance():
    gf2 = field_of_order(2)
    code = oc.code_from_generator(gf2, np.eye(2, dtype=int))
    con = Construction("gfq", gf2, DegreeDistribution(((1, 1),)), 2)
    return RaptorInstance(code, con)


@pytest.fixture
def hamming_instance():
    code = oc.hamming_generator(3)
    return RaptorInstance(code, Construction("gfq", code.field, OMEGA_SMALL, 7))


@pytest.fixture
def gf4_instance():
    gf4 = field_of_order(4)
    code = oc.code_from_generator(gf4, [[1, 0, 1, 2], [0, 1, 3, 1]])
    return RaptorInstance(code, Construction("gfq", gf4, DegreeDistribution(((1, HALF), (2, HALF))), 4))


def test_r10_distribution():
    omega = raptor.omega_r10()
    assert omega.d_max == 40
    assert sum(p for _, p in omega.pairs) == 1
    assert omega.prob(2) == Fraction(4590, 10 ** 4)


def test_rq_bivariate_product_form():
    omega2 = raptor.omega_rq_bivariate(raptor.omega_r10())
    assert {s for _, s, _ in omega2.triples} == {2, 3}
    assert len(omega2.triples) == 14
    for j, s, p in omega2.triples:
        assert p == raptor.omega_r10().prob(j) / 2


def test_threshold_table_ends_at_max():
    table = raptor._thresholds((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)))
    assert int(table[-1]) == 2 ** 64 - 1
    assert list(table) == sorted(table)


def test_degree_frequencies(rng):
    omega = raptor.omega_r10()
    draws = raptor.sample_degrees(omega, rng, 20000)
    counts = Counter(int(d) for d in draws)
    assert set(counts) <= {d for d, _ in omega.pairs}
    # 度 2 的概率 0.459，标准差约 0.0035
    assert abs(counts[2] / 20000 - 0.459) < 0.02


def test_point_mass_degree(rng):
    draws = raptor.sample_degrees(DegreeDistribution(((3, 1),)), rng, 100)
    assert set(int(d) for d in draws) == {3}


def test_partial_fisher_yates_is_uniform(rng):
    counts = Counter(frozenset(raptor._partial_fisher_yates(4, 2, rng)) for _ in range(12000))
    assert len(counts) == 6
    # 每个 2-子集期望 2000 次
    assert all(1700 < c < 2300 for c in counts.values())


def test_partial_fisher_yates_rejects_large_degree(rng):
    with pytest.raises(ValueError):
        raptor._partial_fisher_yates(3, 4, rng)
    assert raptor._partial_fisher_yates(3, 0, rng) == []


def test_columns_have_nonzero_coefficients(rng):
    gf4 = field_of_order(4)
    con = Construction("gfq", gf4, OMEGA_SMALL, 6)
    for col in raptor.sample_columns(con, 50, rng):
        assert len(set(col.indices)) == len(col.indices)
        assert all(0 < c < 4 for c in col.coefs)
        assert all(0 <= i < 6 for i in col.indices)


def test_zero_one_columns_use_unit_coefficients(rng):
    gf4 = field_of_order(4)
    con = Construction("gfq01", gf4, OMEGA_SMALL, 6)
    assert all(set(col.coefs) <= {1} for col in raptor.sample_columns(con, 50, rng))


def test_multi_edge_columns_respect_parts(rng):
    gf2 = field_of_order(2)
    omega2 = BivariateDegreeDistribution(((1, 2, HALF), (2, 1, HALF)))
    con = Construction("met", gf2, omega2, 7, hA=4, hB=3)
    for col in raptor.sample_columns(con, 40, rng):
        a = [i for i in col.indices if i < 4]
        b = [i for i in col.indices if i >= 4]
        assert (len(a), len(b)) in ((1, 2), (2, 1))
        assert all(i < 7 for i in b)


def test_too_few_columns_always_fail(hamming_instance, rng):
    cols = raptor.sample_columns(hamming_instance.construction, 3, rng)
    assert raptor.ml_failure(hamming_instance, cols)
    assert raptor.inactivation_solve(hamming_instance, cols)


def test_ml_failure_on_identity(identity_instance):
    good = [LTColumn((0,), (1,)), LTColumn((1,), (1,))]
    bad = [LTColumn((0,), (1,)), LTColumn((0,), (1,))]
    assert not raptor.ml_failure(identity_instance, good)
    assert raptor.ml_failure(identity_instance, bad)


def test_column_images_gf4(gf4_instance):
    col = LTColumn((0, 2), (2, 3))
    img = raptor.column_images(gf4_instance.outer, [col])[0]
    gf4 = gf4_instance.outer.field
    g = gf4_instance.outer.generator
    expected = [gf4.add(gf4.mul(int(g[r, 0]), 2), gf4.mul(int(g[r, 2]), 3)) for r in range(2)]
    assert list(img) == expected


@pytest.mark.parametrize("name", ["hamming_instance", "gf4_instance"])
def test_inactivation_agrees_with_elimination(name, request):
    instance = request.getfixturevalue(name)
    rng = np.random.default_rng(5)
    k = instance.outer.k
    for trial in range(300):
        m = k + trial % 4
        cols = raptor.sample_columns(instance.construction, m, rng)
        assert raptor.inactivation_solve(instance, cols) == raptor.ml_failure(instance, cols), trial


def test_failure_verdicts_reproducible(hamming_instance):
    def rngs():
        return (np.random.default_rng(s) for s in range(40))
    a = raptor.failure_verdicts(hamming_instance, 5, rngs())
    b = raptor.failure_verdicts(hamming_instance, 5, rngs())
    c = raptor.failure_verdicts(hamming_instance, 5, rngs(), decoder="inactivation")
    assert a == b == c


def test_image_distribution_sums_to_one(gf4_instance):
    dist = raptor.column_image_distribution(gf4_instance)
    assert sum(dist.values()) == 1


@pytest.mark.parametrize("m", range(0, 5))
def test_repetition_oracle_closed_form(repetition_instance, m):
    expected = HALF ** m
    assert raptor.exact_pf_tuples(repetition_instance, m) == expected
    assert raptor.exact_pf_inclusion_exclusion(repetition_instance, m) == expected


def test_identity_oracle(identity_instance):
    # 4 种支撑元组中 2 种覆盖两个坐标
    assert raptor.exact_pf_tuples(identity_instance, 2) == HALF
    assert raptor.exact_pf_inclusion_exclusion(identity_instance, 2) == HALF
    assert raptor.exact_pf_tuples(identity_instance, 1) == 1


@pytest.mark.parametrize("name,ms", [("hamming_instance", (4, 6)), ("gf4_instance", (2, 3, 5))])
def test_oracles_agree(name, ms, request):
    instance = request.getfixturevalue(name)
    for m in ms:
        assert raptor.exact_pf_tuples(instance, m) == raptor.exact_pf_inclusion_exclusion(instance, m)


def test_oracle_is_nonincreasing(hamming_instance):
    values = [raptor.exact_pf_tuples(hamming_instance, m) for m in range(4, 9)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_scaling_the_generator_keeps_failure_probability(gf4_instance):
    moved = oc.left_multiply(gf4_instance.outer, [[2, 1], [0, 3]])
    other = RaptorInstance(moved, gf4_instance.construction)
    for m in (2, 4):
        assert raptor.exact_pf_tuples(other, m) == raptor.exact_pf_tuples(gf4_instance, m)


def test_binary_zero_one_equals_gfq(hamming_instance):
    con01 = Construction("gfq01", hamming_instance.outer.field, OMEGA_SMALL, 7)
    zero_one = RaptorInstance(hamming_instance.outer, con01)
    assert raptor.exact_pf_tuples(zero_one, 5) == raptor.exact_pf_tuples(hamming_instance, 5)


def test_multi_edge_oracles_and_upper_bound():
    code = oc.hamming_generator(3)
    omega2 = BivariateDegreeDistribution(((1, 1, HALF), (2, 2, HALF)))
    con = Construction("met", code.field, omega2, 7, hA=4, hB=3)
    instance = RaptorInstance(code, con)
    A2 = oc.bivariate_weight_of(code, 4)
    for delta in (0, 2):
        exact = raptor.exact_pf_tuples(instance, 4 + delta)
        assert exact == raptor.exact_pf_inclusion_exclusion(instance, 4 + delta)
        assert bd.to_mpf(exact) <= bd.ub_met(A2, omega2, 4, delta, 2) + mpf(10) ** -25


def test_simulation_matches_oracle(repetition_instance):
    rngs = (np.random.default_rng(s) for s in np.random.SeedSequence(7).spawn(4000))
    verdicts = raptor.failure_verdicts(repetition_instance, 3, rngs)
    rate = sum(verdicts) / len(verdicts)
    # p = 1/8，标准差约 0.0052
    assert abs(rate - 0.125) < 0.025


def test_oracle_guard(monkeypatch, hamming_instance):
    import src.config as config
    monkeypatch.setattr(config, "BRUTE_LIMIT", 10)
    with pytest.raises(FeasibilityError):
        raptor.exact_pf_tuples(hamming_instance, 4)


def test_inclusion_exclusion_guard():
    gf3 = field_of_order(3)
    code = oc.code_from_generator(gf3, np.eye(3, dtype=int))
    con = Construction("gfq", gf3, DegreeDistribution(((1, 1),)), 3)
    with pytest.raises(FeasibilityError):
        raptor.exact_pf_inclusion_exclusion(RaptorInstance(code, con), 3)
