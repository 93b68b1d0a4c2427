from fractions import Fraction

import numpy as np
import pytest

from src.models import DegreeDistribution
from src.services import errexp as ee
from src.services.raptor import omega_r10

OMEGA_ONE = DegreeDistribution(((1, 1),))


@pytest.fixture(scope="module")
def omega():
    return omega_r10()


def test_lrfc_line():
    assert ee.lrfc_errexp(0.1, 2) == pytest.approx(0.1)
    assert ee.lrfc_errexp(0.1, 4) == pytest.approx(0.2)


def test_binary_entropy_edges():
    assert ee.binary_entropy(0.5) == pytest.approx(1.0)
    assert float(ee.binary_entropy(0.0)) == 0.0
    assert float(ee.binary_entropy(1.0)) == 0.0


def test_uniform_pc_shape():
    shape = ee.uniform_pc_shape(0.5, 4)
    w = np.array([0.25, 0.75])
    expected = ee.binary_entropy(w) + w * np.log2(3) - 0.5 * 2
    assert np.allclose(shape(w), expected)
    with pytest.raises(ValueError):
        ee.uniform_pc_shape(0.0, 2)


def test_kernel_endpoints(omega):
    limit = ee.AsymptoticKernel("pi_limit", omega, 2)
    varrho = ee.AsymptoticKernel("varrho", omega, 2)
    assert float(limit(0.0)) == pytest.approx(1.0)
    assert float(varrho(0.0)) == pytest.approx(0.0)


def test_binary_kernels_are_complementary(omega):
    limit = ee.AsymptoticKernel("pi_limit", omega, 2)
    varrho = ee.AsymptoticKernel("varrho", omega, 2)
    w = np.linspace(0.0, 1.0, 33)
    assert np.allclose(limit(w) + varrho(w), 1.0)


def test_unknown_kernel_rejected(omega):
    with pytest.raises(ValueError):
        ee.AsymptoticKernel("other", omega, 2)


def test_kernel_limit_check_half():
    finite, limit, varrho = ee.kernel_limit_check(OMEGA_ONE, 100, 2, 0.5)
    assert finite == pytest.approx(0.5)
    assert limit == pytest.approx(0.5)
    assert varrho == pytest.approx(0.5)


def test_kernel_limit_check_quarter():
    # 单度分布：pi_l = 1 - l/h
    finite, limit, varrho = ee.kernel_limit_check(OMEGA_ONE, 400, 2, 0.25)
    assert finite == pytest.approx(0.75)
    assert limit == pytest.approx(0.75)
    assert varrho == pytest.approx(0.25)


def test_kernel_limit_check_rejects_bad_omega():
    with pytest.raises(ValueError):
        ee.kernel_limit_check(OMEGA_ONE, 10, 2, 1.0)


@pytest.mark.parametrize("q", [2, 4])
def test_finite_kernel_converges_to_limit(omega, q):
    grid = np.linspace(0.05, 0.95, 16)
    gaps = []
    for h in (100, 400, 1600):
        gaps.append(max(abs(a - b) for a, b, _ in (ee.kernel_limit_check(omega, h, q, float(w)) for w in grid)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_bound_is_nondecreasing_in_eps(omega):
    shape = ee.uniform_pc_shape(0.95, 2)
    values = [ee.errexp_lower_bound(e, omega, shape) for e in (0.0, 0.02, 0.05, 0.1)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_bound_rejects_negative_eps(omega):
    with pytest.raises(ValueError):
        ee.errexp_lower_bound(-0.1, omega, ee.uniform_pc_shape(0.9, 2))


def test_bound_never_exceeds_lrfc(omega):
    # omega = 1/2 处目标函数恰为 -eps
    shape = ee.uniform_pc_shape(0.5, 2)
    assert ee.errexp_lower_bound(0.1, omega, shape) <= ee.lrfc_errexp(0.1, 2) + 1e-9


def test_threshold_is_a_sign_change(omega):
    shape = ee.uniform_pc_shape(0.95, 2)
    eps_star = ee.ml_threshold_upper(omega, shape)
    assert 0 < eps_star < ee.EPS_MAX
    assert ee.errexp_lower_bound(max(eps_star - 1e-4, 0.0), omega, shape) <= 0
    assert ee.errexp_lower_bound(eps_star + 1e-4, omega, shape) > 0


def test_threshold_grows_with_rate(omega):
    low = ee.ml_threshold_upper(omega, ee.uniform_pc_shape(0.90, 2))
    high = ee.ml_threshold_upper(omega, ee.uniform_pc_shape(0.98, 2))
    assert low < high


def test_errexp_curve_rows(omega):
    rows = ee.errexp_curve([0.0, 0.5], omega, ee.uniform_pc_shape(0.9, 2))
    assert [r[0] for r in rows] == [0.0, 0.5]
    assert rows[0][1] <= rows[1][1]
