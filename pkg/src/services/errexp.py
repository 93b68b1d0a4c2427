"""Error-exponent lower bounds for Raptor ensemble sequences and the ML threshold
estimate derived from them. Curves are evaluated in float64 with numpy."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..models import DegreeDistribution
from .bounds import pi_l

logger = logging.getLogger(__name__)

GRID_POINTS = 2048
OMEGA_TOL = 1e-9
EPS_TOL = 1e-8
EPS_MAX = 10.0

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class SpectralShape:
    """G(omega) in bits per outer symbol."""
    evaluator: Callable[[np.ndarray], np.ndarray]
    rate: float
    q: int

    def __call__(self, omega):
        return self.evaluator(omega)


def binary_entropy(omega):
    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -omega * np.log2(omega) - (1 - omega) * np.log2(1 - omega)
    return np.where((omega <= 0) | (omega >= 1), 0.0, out)


def uniform_pc_shape(rate: float, q: int) -> SpectralShape:
    """G(omega) = H_b(omega) + omega log2(q-1) - (1-R) log2 q."""
    if not 0 < rate <= 1:
        raise ValueError(f"outer rate must lie in (0, 1], got {rate}")

    def g(omega):
        omega = np.asarray(omega, dtype=float)
        return binary_entropy(omega) + omega * math.log2(q - 1) - (1 - rate) * math.log2(q)

    return SpectralShape(g, rate, q)


@dataclass(frozen=True)
class AsymptoticKernel:
    variant: str  # 'pi_limit' | 'varrho'
    omega_dist: DegreeDistribution
    q: int

    def __post_init__(self):
        if self.variant not in ("pi_limit", "varrho"):
            raise ValueError(f"unknown kernel variant {self.variant}")

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.variant == "pi_limit":
            base = 1 - self.q * omega / (self.q - 1)
            mix = sum(float(p) * base ** d for d, p in self.omega_dist.pairs)
            return 1 / self.q + (self.q - 1) / self.q * mix
        return 0.5 * sum(float(p) * (1 - (1 - 2 * omega) ** d) for d, p in self.omega_dist.pairs)


def _objective(omega, epsilon: float, shape: SpectralShape, kernel: AsymptoticKernel):
    g = np.asarray(shape(omega), dtype=float)
    if np.any(~np.isfinite(g)):
        raise ValueError("spectral shape is undefined on part of (0, 1]")
    k = np.asarray(kernel(omega), dtype=float)
    with np.errstate(divide="ignore"):
        logk = np.where(k > 0, np.log2(np.where(k > 0, k, 1.0)), -np.inf)
    return g / shape.rate + (1 + epsilon) * logk


def _golden_max(fn, lo: float, hi: float) -> Tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > OMEGA_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


def supremum(epsilon: float, shape: SpectralShape, kernel: AsymptoticKernel) -> Tuple[float, float]:
    """(omega*, sup) of G/R + (1+eps) log2 kernel over (0, 1]."""
    grid = np.arange(1, GRID_POINTS + 1) / GRID_POINTS
    values = _objective(grid, epsilon, shape, kernel)
    fn = lambda w: float(_objective(np.array([w]), epsilon, shape, kernel)[0])
    best_w = float(grid[int(np.argmax(values))])
    best = float(np.max(values))
    # refine every grid-local maximum
    n = len(grid)
    for i in range(n):
        left = values[i - 1] if i > 0 else -np.inf
        right = values[i + 1] if i + 1 < n else -np.inf
        if not np.isfinite(values[i]) or values[i] < left or values[i] < right:
            continue
        lo = grid[i - 1] if i > 0 else grid[0] / 2
        hi = grid[i + 1] if i + 1 < n else 1.0
        w, v = _golden_max(fn, float(lo), float(hi))
        if v > best:
            best_w, best = w, v
    return best_w, best


def errexp_lower_bound(epsilon: float, omega: DegreeDistribution, shape: SpectralShape,
                       kernel: Optional[AsymptoticKernel] = None) -> float:
    """E(eps) >= -sup_omega [G(omega)/R + (1+eps) log2 kernel(omega)]."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    kernel = kernel or AsymptoticKernel("pi_limit", omega, shape.q)
    return -supremum(epsilon, shape, kernel)[1]


def lrfc_errexp(epsilon: float, q: int) -> float:
    return epsilon * math.log2(q)


def ml_threshold_upper(omega: DegreeDistribution, shape: SpectralShape,
                       kernel: Optional[AsymptoticKernel] = None) -> float:
    """Smallest eps where the error-exponent bound turns positive (bisection)."""
    kernel = kernel or AsymptoticKernel("pi_limit", omega, shape.q)
    f = lambda e: errexp_lower_bound(e, omega, shape, kernel)
    lo, hi = 0.0, EPS_MAX
    if f(lo) >= 0 or f(hi) <= 0:
        raise ArithmeticError(f"no sign change of the error-exponent bound on [0, {EPS_MAX}]")
    while hi - lo > EPS_TOL:
        mid = (lo + hi) / 2
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    eps_star = (lo + hi) / 2
    logger.info("ML threshold R=%.4f q=%d kernel=%s: eps*=%.6g", shape.rate, shape.q, kernel.variant, eps_star)
    return eps_star


def kernel_limit_check(omega: DegreeDistribution, h: int, q: int, w: float) -> Tuple[float, float, float]:
    """(pi_l at l = floor(w h), pi_limit(w), varrho(w))."""
    if not 0 < w < 1:
        raise ValueError("omega must lie in (0, 1)")
    finite = float(pi_l(int(math.floor(w * h)), omega, h, q))
    return (
        finite,
        float(AsymptoticKernel("pi_limit", omega, q)(w)),
        float(AsymptoticKernel("varrho", omega, q)(w)),
    )


def errexp_curve(eps_grid: Sequence[float], omega: DegreeDistribution, shape: SpectralShape,
                 kernel: Optional[AsymptoticKernel] = None) -> List[Tuple[float, float]]:
    return [(float(e), errexp_lower_bound(float(e), omega, shape, kernel)) for e in eps_grid]
