from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from .galois import FieldSpec

Composition = Tuple[int, ...]


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---- enumerators ------------------------------------------------------------

@dataclass(frozen=True)
class WeightEnumerator:
    h: int
    counts: Tuple[Fraction, ...]

    def __post_init__(self):
        counts = tuple(_as_fraction(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.h + 1:
            raise ValueError(f"WeightEnumerator needs {self.h + 1} counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise ValueError("WeightEnumerator counts must be nonnegative")

    def __getitem__(self, l: int) -> Fraction:
        return self.counts[l]

    def total(self) -> Fraction:
        return sum(self.counts, Fraction(0))


@dataclass(frozen=True)
class BivariateWeightEnumerator:
    hA: int
    hB: int
    counts: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        counts = tuple(tuple(_as_fraction(c) for c in row) for row in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.hA + 1 or any(len(row) != self.hB + 1 for row in counts):
            raise ValueError(f"BivariateWeightEnumerator needs a {self.hA + 1}x{self.hB + 1} grid")
        if any(c < 0 for row in counts for c in row):
            raise ValueError("BivariateWeightEnumerator counts must be nonnegative")

    @property
    def h(self) -> int:
        return self.hA + self.hB

    def __getitem__(self, lt: Tuple[int, int]) -> Fraction:
        return self.counts[lt[0]][lt[1]]

    def total(self) -> Fraction:
        return sum((c for row in self.counts for c in row), Fraction(0))

    def rebinned(self) -> WeightEnumerator:
        """Univariate enumerator of the full length, binned by l + t."""
        out = [Fraction(0)] * (self.h + 1)
        for l, row in enumerate(self.counts):
            for t, c in enumerate(row):
                out[l + t] += c
        return WeightEnumerator(self.h, tuple(out))


@dataclass(frozen=True)
class CompositionEnumerator:
    h: int
    q: int
    entries: Dict[Composition, Fraction] = field(hash=False)

    def __post_init__(self):
        for f, c in self.entries.items():
            if len(f) != self.q or sum(f) != self.h or min(f) < 0:
                raise ValueError(f"invalid composition key {f} for h={self.h}, q={self.q}")
            if c < 0:
                raise ValueError("CompositionEnumerator counts must be nonnegative")

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))


@dataclass(frozen=True)
class BivariateCompositionEnumerator:
    hA: int
    hB: int
    q: int
    entries: Dict[Tuple[Composition, Composition], Fraction] = field(hash=False)

    def __post_init__(self):
        for (fa, fb), c in self.entries.items():
            if sum(fa) != self.hA or sum(fb) != self.hB or len(fa) != self.q or len(fb) != self.q:
                raise ValueError(f"invalid bicomposition key {(fa, fb)}")
            if c < 0:
                raise ValueError("BivariateCompositionEnumerator counts must be nonnegative")

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))


@dataclass(frozen=True)
class JointComposition:
    """q x q matrix kappa; rows index the first word's symbol, columns the second's."""
    cells: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        q = len(self.cells)
        if q < 2 or any(len(row) != q for row in self.cells):
            raise ValueError("JointComposition must be a square matrix of order q >= 2")
        if any(c < 0 for row in self.cells for c in row):
            raise ValueError("JointComposition entries must be nonnegative")

    @property
    def q(self) -> int:
        return len(self.cells)

    @property
    def size(self) -> int:
        return sum(sum(row) for row in self.cells)

    def block1(self) -> Tuple[int, ...]:
        return self.cells[0][1:]

    def block2(self) -> Tuple[int, ...]:
        return tuple(row[0] for row in self.cells[1:])

    def block3(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(row[1:] for row in self.cells[1:])


class JointWeight(NamedTuple):
    t0: int
    t1: int
    t2: int
    t3: int


@dataclass(frozen=True)
class JointEnumerator:
    """Pair enumerator keyed by JointComposition (kind='bicomposition') or JointWeight (kind='biweight')."""
    kind: str
    h: int
    q: int
    entries: Dict[object, Fraction] = field(hash=False)
    excluded: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("bicomposition", "biweight"):
            raise ValueError(f"unknown joint enumerator kind {self.kind}")
        if self.kind == "biweight" and self.q != 2:
            raise ValueError("biweight enumerators are binary")


# ---- degree distributions ---------------------------------------------------

@dataclass(frozen=True)
class DegreeDistribution:
    pairs: Tuple[Tuple[int, Fraction], ...]

    def __post_init__(self):
        pairs = tuple(sorted((int(d), _as_fraction(p)) for d, p in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        degrees = [d for d, _ in pairs]
        if not pairs:
            raise ValueError("empty degree distribution")
        if len(set(degrees)) != len(degrees):
            raise ValueError("degrees must be distinct")
        if degrees[0] < 1:
            raise ValueError("degrees must be >= 1")
        if any(p < 0 for _, p in pairs):
            raise ValueError("probabilities must be nonnegative")
        if sum(p for _, p in pairs) != 1:
            raise ValueError("degree distribution must sum exactly to 1")

    @property
    def d_max(self) -> int:
        return self.pairs[-1][0]

    def prob(self, d: int) -> Fraction:
        return dict(self.pairs).get(d, Fraction(0))


@dataclass(frozen=True)
class BivariateDegreeDistribution:
    triples: Tuple[Tuple[int, int, Fraction], ...]
    allow_unit_degrees: bool = False

    def __post_init__(self):
        triples = tuple(sorted((int(j), int(s), _as_fraction(p)) for j, s, p in self.triples))
        object.__setattr__(self, "triples", triples)
        keys = [(j, s) for j, s, _ in triples]
        if not triples:
            raise ValueError("empty bivariate degree distribution")
        if len(set(keys)) != len(keys):
            raise ValueError("degree pairs must be distinct")
        for j, s, p in triples:
            if j < 0 or s < 0 or p < 0:
                raise ValueError("degrees and probabilities must be nonnegative")
            if (j, s) == (0, 0) and p > 0:
                raise ValueError("Omega_{0,0} must be zero")
            if (j, s) in ((0, 1), (1, 0)) and p > 0 and not self.allow_unit_degrees:
                raise ValueError("Omega_{0,1} and Omega_{1,0} must be zero")
        if sum(p for _, _, p in triples) != 1:
            raise ValueError("bivariate degree distribution must sum exactly to 1")

    @property
    def j_max(self) -> int:
        return max(j for j, _, _ in self.triples)

    @property
    def s_max(self) -> int:
        return max(s for _, s, _ in self.triples)


# ---- codes and constructions ------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearCode:
    field: FieldSpec
    generator: np.ndarray
    parity_check: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.asarray(self.generator, dtype=np.int64)
        if g.ndim != 2:
            raise ValueError("generator must be a 2-D matrix")
        if g.size and (g.min() < 0 or g.max() >= self.field.q):
            raise ValueError(f"generator entries must lie in 0..{self.field.q - 1}")
        object.__setattr__(self, "generator", g)
        if g.shape[0] > g.shape[1]:
            raise ValueError("generator has more rows than columns")

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def h(self) -> int:
        return self.generator.shape[1]

    @property
    def rate(self) -> float:
        return self.k / self.h


@dataclass(frozen=True)
class OuterEnsembleSpec:
    variant: str  # 'uniform-pc' | 'ldpc' | 'explicit'
    field: FieldSpec
    h: int
    k: int
    dv: int = 0
    dc: int = 0
    code: Optional[LinearCode] = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in ("uniform-pc", "ldpc", "explicit"):
            raise ValueError(f"unknown ensemble variant {self.variant}")
        if not 0 < self.k <= self.h:
            raise ValueError(f"need 0 < k <= h, got k={self.k}, h={self.h}")
        if self.variant == "ldpc":
            if self.dv < 1 or self.dc < 1 or (self.h * self.dv) % self.dc:
                raise ValueError("LDPC ensemble needs h*dv divisible by dc")
        if self.variant == "explicit" and self.code is None:
            raise ValueError("explicit ensemble needs a code")


VARIANTS = ("gfq", "met", "gfq01", "met01")


@dataclass(frozen=True)
class Construction:
    variant: str
    field: FieldSpec
    omega: object  # DegreeDistribution or BivariateDegreeDistribution
    h: int
    hA: Optional[int] = None
    hB: Optional[int] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"construction must be one of {VARIANTS}, got {self.variant}")
        if self.multi_edge:
            if self.hA is None or self.hB is None or self.hA + self.hB != self.h:
                raise ValueError("multi-edge constructions need hA + hB = h")
            if not isinstance(self.omega, BivariateDegreeDistribution):
                raise ValueError("multi-edge constructions need a bivariate degree distribution")
            if self.omega.j_max > self.hA or self.omega.s_max > self.hB:
                raise ValueError("degree exceeds part length")
        else:
            if not isinstance(self.omega, DegreeDistribution):
                raise ValueError("single-edge constructions need a univariate degree distribution")
            if self.omega.d_max > self.h:
                raise ValueError(f"d_max={self.omega.d_max} exceeds h={self.h}")

    @property
    def multi_edge(self) -> bool:
        return self.variant in ("met", "met01")

    @property
    def zero_one(self) -> bool:
        return self.variant in ("gfq01", "met01")


@dataclass(frozen=True)
class LTColumn:
    indices: Tuple[int, ...]
    coefs: Tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.coefs):
            raise ValueError("indices and coefficients differ in length")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("row indices must be distinct")
        if any(c == 0 for c in self.coefs):
            raise ValueError("LT column coefficients must be nonzero")


@dataclass(frozen=True, eq=False)
class RaptorInstance:
    outer: LinearCode
    construction: Construction

    def __post_init__(self):
        if self.outer.field != self.construction.field:
            raise ValueError("outer code and construction use different fields")
        if self.outer.h != self.construction.h:
            raise ValueError("outer length differs from construction length")


# ---- results ------------------------------------------------------------------

@dataclass
class BoundResult:
    delta: int
    s1: object
    s2: Optional[object]
    upper: object
    lower_bonferroni: Optional[object] = None
    lower_dawson_sankoff: Optional[object] = None
    raw_bonferroni: Optional[object] = None
    raw_dawson_sankoff: Optional[object] = None
    lrfc: Optional[object] = None
    flags: Tuple[str, ...] = ()


@dataclass
class SimResult:
    delta: int
    trials: int
    failures: int
    p_hat: float
    ci_low: float
    ci_high: float
    codes_above_k: int = 0
    # 集成仿真：每个码用 m = k_C + delta 时的失败数
    failures_at_kc: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 <= self.failures <= self.trials:
            raise ValueError("need 0 <= failures <= trials")
        if not self.ci_low <= self.p_hat <= self.ci_high:
            raise ValueError("confidence interval must contain p_hat")


@dataclass
class Campaign:
    deltas: Tuple[int, ...]
    master_seed: int = 0
    target_failures: Optional[int] = None
    max_trials: Optional[int] = None
    instance: Optional[RaptorInstance] = None
    ensemble: Optional[OuterEnsembleSpec] = None
    construction: Optional[Construction] = None
    n_codes: int = 1
    trials_per_code: int = 1
    level: float = 0.95
    decoder: str = "ge"

    def __post_init__(self):
        if (self.target_failures or 0) < 1 and (self.max_trials or 0) < 1:
            raise ValueError("stop rule needs target_failures >= 1 or max_trials >= 1")
        if any(d < 0 for d in self.deltas):
            raise ValueError("delta values must be >= 0")
        if self.instance is None and self.ensemble is None:
            raise ValueError("campaign needs an instance or an ensemble")
        if self.ensemble is not None and self.construction is None:
            raise ValueError("ensemble campaigns need a construction")
        if self.n_codes < 1 or self.trials_per_code < 1:
            raise ValueError("n_codes and trials_per_code must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("confidence level must lie in (0, 1)")
        if self.decoder not in ("ge", "inactivation"):
            raise ValueError(f"unknown decoder {self.decoder}")
