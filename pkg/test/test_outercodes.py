import numpy as np
import pytest

from src.errors import ConfigError, FeasibilityError
from src.galois import field_of_order
from src.models import OuterEnsembleSpec
from src.services import outercodes as oc


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_rank_and_nullspace(q, rng):
    gf = field_of_order(q)
    mat = rng.integers(0, q, size=(4, 7))
    r = oc.rank(mat, gf)
    ns = oc.nullspace(mat, gf)
    assert ns.shape[0] == 7 - r
    # mat @ x = 0 对每个零空间基向量成立
    assert not gf.matmul(mat, ns.T).any()


def test_packed_rank_matches_dense(rng):
    gf2 = field_of_order(2)
    for _ in range(20):
        mat = rng.integers(0, 2, size=(12, 9))
        rows = oc.pack_rows_gf2(mat)
        assert oc.rank_gf2_packed(rows) == oc.row_reduce(mat, gf2).rank


def test_packed_rank_stops_early():
    rows = [1, 2, 4, 8, 3]
    assert oc.rank_gf2_packed(rows, stop_at=2) == 2


def test_solve_reports_deficiency():
    gf3 = field_of_order(3)
    mat = np.array([[1, 1], [2, 2]])
    res = oc.solve(mat, [1, 2], gf3)
    assert res.consistent and not res.unique
    res = oc.solve(mat, [1, 1], gf3)
    assert not res.consistent and res.solution is None


def test_solve_unique():
    gf4 = field_of_order(4)
    mat = np.array([[1, 2], [2, 1]])
    x = np.array([2, 3])
    rhs = gf4.matmul(mat, x[:, None])[:, 0]
    res = oc.solve(mat, rhs, gf4)
    assert res.unique and list(res.solution) == [2, 3]


def test_generator_must_be_full_rank():
    gf2 = field_of_order(2)
    with pytest.raises(ValueError):
        oc.code_from_generator(gf2, [[1, 1, 0], [1, 1, 0]])


def test_hamming_code_parameters():
    code = oc.hamming_generator(6)
    assert (code.h, code.k) == (63, 57)
    H = oc.hamming_parity_check(6)
    assert not code.field.matmul(code.generator, H.T).any()


def test_hamming_parameter_range():
    with pytest.raises(ConfigError):
        oc.hamming_parity_check(1)


def test_dual_code_is_orthogonal(rng):
    gf4 = field_of_order(4)
    g = np.array([[1, 0, 2, 3, 1], [0, 1, 1, 2, 3]])
    code = oc.code_from_generator(gf4, g)
    dual = oc.dual_code(code)
    assert dual.k == 3
    assert not gf4.matmul(code.generator, dual.generator.T).any()


def test_left_multiply_keeps_codebook():
    gf3 = field_of_order(3)
    code = oc.code_from_generator(gf3, [[1, 0, 1, 2], [0, 1, 2, 2]])
    other = oc.left_multiply(code, [[1, 1], [0, 2]])
    a = {tuple(w) for w in oc.codewords(code)}
    b = {tuple(w) for w in oc.codewords(other)}
    assert a == b


def test_codewords_guard():
    code = oc.hamming_generator(6)
    with pytest.raises(FeasibilityError):
        oc.codewords(code)


def test_sample_uniform_pc_dimension(rng):
    gf2 = field_of_order(2)
    for _ in range(10):
        code = oc.sample_uniform_pc(10, 8, gf2, rng)
        assert code.k >= 8
        assert not gf2.matmul(code.generator, code.parity_check.T).any()


def test_sample_ldpc_is_regular_in_sockets(rng):
    gf4 = field_of_order(4)
    code = oc.sample_regular_ldpc(2, 4, 8, gf4, rng)
    assert code.parity_check.shape == (4, 8)
    assert not gf4.matmul(code.generator, code.parity_check.T).any()
    assert code.k >= 4


def test_sample_code_dispatch(rng):
    gf2 = field_of_order(2)
    explicit = oc.hamming_generator(3)
    spec = OuterEnsembleSpec("explicit", gf2, 7, 4, code=explicit)
    assert oc.sample_code(spec, rng) is explicit
    spec = OuterEnsembleSpec("uniform-pc", gf2, 7, 4)
    assert oc.sample_code(spec, rng).h == 7


def test_exhaustive_composition_counts():
    gf3 = field_of_order(3)
    code = oc.code_from_generator(gf3, [[1, 1, 1]])
    Q = oc.exhaustive_enumerators(code, "composition")
    # 码字 000, 111, 222
    assert Q.entries == {(3, 0, 0): 1, (0, 3, 0): 1, (0, 0, 3): 1}


def test_exhaustive_bivariate_needs_split():
    code = oc.hamming_generator(3)
    with pytest.raises(ConfigError):
        oc.exhaustive_enumerators(code, "bivariate_weight")


def test_hamming_biweight_63_is_restricted():
    J = oc.hamming_biweight(6)
    assert J.kind == "biweight" and J.h == 63
    # 线性无关有序对：(2^57 - 1)(2^57 - 2)
    assert sum(J.entries.values()) == (2 ** 57 - 1) * (2 ** 57 - 2)


def test_joint_composition_of():
    gf2 = field_of_order(2)
    kappa = oc.joint_composition_of([0, 1, 1, 0], [1, 1, 0, 0], gf2)
    assert kappa.cells == ((1, 1), (1, 1))
