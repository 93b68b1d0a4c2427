"""Upper and lower bounds on the ML decoding failure probability.

Every pi-type kernel is an exact Fraction; it is converted once to an mpmath
float and the outer sums run in the log domain.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from mpmath import mp, mpf

from .. import config
from ..errors import ConfigError, check_feasible
from ..galois import FieldSpec, phi_q
from ..models import (
    BivariateCompositionEnumerator,
    BivariateDegreeDistribution,
    BivariateWeightEnumerator,
    BoundResult,
    Composition,
    CompositionEnumerator,
    Construction,
    DegreeDistribution,
    JointComposition,
    JointEnumerator,
    JointWeight,
    WeightEnumerator,
)
from . import enumerators
from .enumerators import b_indicator, compositions_iter, count_compositions, krawtchouk

logger = logging.getLogger(__name__)

mp.prec = config.PRECISION_BITS

_CLAMP = mpf(10) ** -30

Prepared = List[Tuple[mpf, mpf]]


# ---- conversions --------------------------------------------------------------

def to_mpf(x) -> mpf:
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


def _log_fraction(x: Fraction) -> mpf:
    return mp.log(mpf(x.numerator)) - mp.log(mpf(x.denominator))


def _probability(x: Fraction) -> mpf:
    value = to_mpf(x)
    if value < 0:
        if value > -_CLAMP:
            return mpf(0)
        raise ArithmeticError(f"probability {value} below zero")
    if value > 1:
        if value < 1 + _CLAMP:
            return mpf(1)
        raise ArithmeticError(f"probability {value} above one")
    return value


def _prepare(pairs: Iterable[Tuple[Fraction, Fraction]]) -> Prepared:
    """(weight, probability) pairs -> (log weight, log probability); empty terms dropped."""
    out = []
    for weight, prob in pairs:
        if weight == 0 or prob == 0:
            continue
        out.append((_log_fraction(Fraction(weight)), _log_fraction(prob)))
    return out


def _power_sum(prepared: Prepared, exponent: int) -> mpf:
    """sum_i w_i p_i^exponent by log-sum-exp."""
    if not prepared:
        return mpf(0)
    logs = [lw + exponent * lp for lw, lp in prepared]
    top = max(logs)
    return mp.exp(top) * mp.fsum(mp.exp(v - top) for v in logs)


# ---- single-edge kernels ------------------------------------------------------

def _check_omega(omega: DegreeDistribution, h: int) -> None:
    if omega.d_max > h:
        raise ValueError(f"d_max={omega.d_max} exceeds h={h}")


@lru_cache(maxsize=1 << 16)
def _krawtchouk_mix(l: int, omega: DegreeDistribution, h: int, q: int) -> Fraction:
    return sum(
        (p * Fraction(krawtchouk(j, l, h, q), krawtchouk(j, 0, h, q)) for j, p in omega.pairs),
        Fraction(0),
    )


def pi_l_exact(l: int, omega: DegreeDistribution, h: int, q: int) -> Fraction:
    _check_omega(omega, h)
    if not 0 <= l <= h:
        raise ValueError(f"weight {l} outside 0..{h}")
    return Fraction(1, q) + Fraction(q - 1, q) * _krawtchouk_mix(l, omega, h, q)


def pi_l(l: int, omega: DegreeDistribution, h: int, q: int) -> mpf:
    """Probability that a fresh LT column is orthogonal to a fixed weight-l word."""
    return _probability(pi_l_exact(l, omega, h, q))


def theta_neighbors(i: int, l: int, j: int, h: int) -> Fraction:
    """Hypergeometric probability that a j-subset meets a fixed l-subset in i places."""
    return Fraction(comb(l, i) * comb(h - l, j - i), comb(h, j))


def pi_l_expansion(l: int, omega: DegreeDistribution, h: int, q: int) -> Fraction:
    _check_omega(omega, h)
    return sum(
        (p * theta_neighbors(i, l, j, h) * phi_q(i, q) for j, p in omega.pairs for i in range(0, min(j, l) + 1)),
        Fraction(0),
    )


def pi_lt_exact(l: int, t: int, omega2: BivariateDegreeDistribution, hA: int, hB: int, q: int) -> Fraction:
    if omega2.j_max > hA or omega2.s_max > hB:
        raise ValueError("degree exceeds part length")
    if not (0 <= l <= hA and 0 <= t <= hB):
        raise ValueError(f"weights ({l},{t}) outside the part lengths")
    mix = Fraction(0)
    for j, s, p in omega2.triples:
        mix += p * Fraction(krawtchouk(j, l, hA, q), krawtchouk(j, 0, hA, q)) \
            * Fraction(krawtchouk(s, t, hB, q), krawtchouk(s, 0, hB, q))
    return Fraction(1, q) + Fraction(q - 1, q) * mix


def pi_lt(l: int, t: int, omega2: BivariateDegreeDistribution, hA: int, hB: int, q: int) -> mpf:
    return _probability(pi_lt_exact(l, t, omega2, hA, hB, q))


# ---- 0/1 kernels ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _trace_masks(field: FieldSpec) -> Tuple[Tuple[int, ...], ...]:
    """For each a != 0, the composition indices i with Tr(a * alpha^(i-1)) = 1."""
    out = []
    for a in field.nonzero():
        out.append(tuple(i for i in range(1, field.q) if field.trace(field.mul(a, field.element_of_index(i)))))
    return tuple(out)


@lru_cache(maxsize=None)
def _pair_trace_masks(field: FieldSpec) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    """For each (a, b) != (0, 0), the cells (s, t) with Tr(a e_s + b e_t) = 1."""
    q = field.q
    out = []
    for a in range(q):
        for b in range(q):
            if a == 0 and b == 0:
                continue
            cells = []
            for s in range(q):
                for t in range(q):
                    x = field.add(field.mul(a, field.element_of_index(s)), field.mul(b, field.element_of_index(t)))
                    if field.trace(x):
                        cells.append((s, t))
            out.append(tuple(cells))
    return tuple(out)


@lru_cache(maxsize=1 << 16)
def _binary_mix(n: int, omega: DegreeDistribution, h: int) -> Fraction:
    """sum_j Omega_j K_j(n; h, 2) / C(h, j)."""
    return _krawtchouk_mix(n, omega, h, 2)


@lru_cache(maxsize=1 << 16)
def _binary_mix2(na: int, nb: int, omega2: BivariateDegreeDistribution, hA: int, hB: int) -> Fraction:
    return sum(
        (p * Fraction(krawtchouk(j, na, hA, 2), comb(hA, j)) * Fraction(krawtchouk(s, nb, hB, 2), comb(hB, s))
         for j, s, p in omega2.triples),
        Fraction(0),
    )


def _bounded_compositions(total: int, caps: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Compositions of `total` with part i at most caps[i]."""
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    rest_cap = sum(caps[1:])
    for first in range(max(0, total - rest_cap), min(caps[0], total) + 1):
        for rest in _bounded_compositions(total - first, caps[1:]):
            yield (first,) + rest


def _hyper_weight(f: Sequence[int], g: Sequence[int]) -> int:
    out = 1
    for fi, gi in zip(f, g):
        out *= comb(fi, gi)
    return out


def pi_f_literal(f: Composition, omega: DegreeDistribution, h: int, field: FieldSpec) -> Fraction:
    """sum_j Omega_j sum_{gamma <= f, |gamma| = j} B(gamma) prod C(f_i, gamma_i) / C(h, j)."""
    _check_omega(omega, h)
    q = field.q
    check_feasible("Gamma_j compositions", sum(count_compositions(j, q) for j, _ in omega.pairs), config.KEY_LIMIT)
    total = Fraction(0)
    for j, p in omega.pairs:
        acc = 0
        for g in _bounded_compositions(j, f):
            if b_indicator(g, field):
                acc += _hyper_weight(f, g)
        total += p * Fraction(acc, comb(h, j))
    return total


def pi_f_exact(f: Composition, omega: DegreeDistribution, h: int, field: FieldSpec) -> Fraction:
    if len(f) != field.q or sum(f) != h:
        raise ValueError(f"composition {f} does not match h={h}, q={field.q}")
    if field.p != 2:
        return pi_f_literal(f, omega, h, field)
    _check_omega(omega, h)
    acc = Fraction(1)
    for mask in _trace_masks(field):
        acc += _binary_mix(sum(f[i] for i in mask), omega, h)
    return acc / field.q


def pi_f(f: Composition, omega: DegreeDistribution, h: int, field: FieldSpec) -> mpf:
    return _probability(pi_f_exact(f, omega, h, field))


def pi_fAfB_literal(fA: Composition, fB: Composition, omega2: BivariateDegreeDistribution,
                    hA: int, hB: int, field: FieldSpec) -> Fraction:
    total = Fraction(0)
    for j, s, p in omega2.triples:
        acc = 0
        for ga in _bounded_compositions(j, fA):
            wa = _hyper_weight(fA, ga)
            for gb in _bounded_compositions(s, fB):
                if b_indicator(tuple(x + y for x, y in zip(ga, gb)), field):
                    acc += wa * _hyper_weight(fB, gb)
        total += p * Fraction(acc, comb(hA, j) * comb(hB, s))
    return total


def pi_fAfB_exact(fA: Composition, fB: Composition, omega2: BivariateDegreeDistribution,
                  hA: int, hB: int, field: FieldSpec) -> Fraction:
    if sum(fA) != hA or sum(fB) != hB:
        raise ValueError("bicomposition does not match the part lengths")
    if omega2.j_max > hA or omega2.s_max > hB:
        raise ValueError("degree exceeds part length")
    if field.p != 2:
        return pi_fAfB_literal(fA, fB, omega2, hA, hB, field)
    acc = Fraction(1)
    for mask in _trace_masks(field):
        acc += _binary_mix2(sum(fA[i] for i in mask), sum(fB[i] for i in mask), omega2, hA, hB)
    return acc / field.q


def pi_fAfB(fA, fB, omega2, hA, hB, field) -> mpf:
    return _probability(pi_fAfB_exact(fA, fB, omega2, hA, hB, field))


# ---- pair kernels for the second Bonferroni sum --------------------------------

def pair_probability_literal(kappa: JointComposition, omega: DegreeDistribution, h: int,
                             field: FieldSpec) -> Fraction:
    """sum_j Omega_j sum_{upsilon <= kappa} B(gamma_1) B(gamma_2) prod C(kappa, upsilon) / C(h, j)."""
    q = field.q
    caps = [c for row in kappa.cells for c in row]
    total = Fraction(0)
    for j, p in omega.pairs:
        acc = 0
        for flat in _bounded_compositions(j, caps):
            rows = tuple(sum(flat[r * q:(r + 1) * q]) for r in range(q))
            cols = tuple(sum(flat[r * q + c] for r in range(q)) for c in range(q))
            if b_indicator(rows, field) and b_indicator(cols, field):
                acc += _hyper_weight(caps, flat)
        total += p * Fraction(acc, comb(h, j))
    return total


def pair_probability_exact(kappa: JointComposition, omega: DegreeDistribution, h: int,
                           field: FieldSpec) -> Fraction:
    """Probability that a 0/1 column is orthogonal to both words of joint composition kappa."""
    if kappa.q != field.q or kappa.size != h:
        raise ValueError("joint composition does not match the field or length")
    _check_omega(omega, h)
    if field.p != 2:
        return pair_probability_literal(kappa, omega, h, field)
    acc = Fraction(1)
    for cells in _pair_trace_masks(field):
        acc += _binary_mix(sum(kappa.cells[s][t] for s, t in cells), omega, h)
    return acc / (field.q * field.q)


def pair_probability_binary_triplets(tau: JointWeight, omega: DegreeDistribution, h: int) -> Fraction:
    """Binary pair probability as the (i1, i2, i3) sum with i1+i3 and i2+i3 even."""
    _check_omega(omega, h)
    t0, t1, t2, t3 = tau
    total = Fraction(0)
    for j, p in omega.pairs:
        acc = 0
        for i1 in range(0, min(t1, j) + 1):
            for i2 in range(0, min(t2, j - i1) + 1):
                for i3 in range(0, min(t3, j - i1 - i2) + 1):
                    if (i1 + i3) % 2 or (i2 + i3) % 2:
                        continue
                    acc += comb(t0, j - i1 - i2 - i3) * comb(t1, i1) * comb(t2, i2) * comb(t3, i3)
        total += p * Fraction(acc, comb(h, j))
    return total


def pair_probability_binary(tau: JointWeight, omega: DegreeDistribution, h: int) -> Fraction:
    """Same value as the triplet sum, through binary Krawtchouk ratios of the three nonzero sums."""
    _check_omega(omega, h)
    _, t1, t2, t3 = tau
    return (1 + _binary_mix(t2 + t3, omega, h) + _binary_mix(t1 + t3, omega, h)
            + _binary_mix(t1 + t2, omega, h)) / 4


# ---- upper bounds ----------------------------------------------------------------

def _check_delta(k: int, delta: int) -> None:
    if delta < 0 or k < 1:
        raise ValueError(f"need k >= 1 and delta >= 0, got k={k}, delta={delta}")


def _terms_gfq(A: WeightEnumerator, omega: DegreeDistribution, q: int) -> Prepared:
    _check_omega(omega, A.h)
    return _prepare((A[l], pi_l_exact(l, omega, A.h, q)) for l in range(1, A.h + 1) if A[l])


def _terms_met(A: BivariateWeightEnumerator, omega2: BivariateDegreeDistribution, q: int) -> Prepared:
    return _prepare(
        (A[l, t], pi_lt_exact(l, t, omega2, A.hA, A.hB, q))
        for l in range(A.hA + 1) for t in range(A.hB + 1) if (l or t) and A[l, t]
    )


def _terms_gfq01(Q: CompositionEnumerator, omega: DegreeDistribution, field: FieldSpec) -> Prepared:
    if Q.q != field.q:
        raise ValueError("composition enumerator and field disagree on q")
    return _prepare(
        (c, pi_f_exact(f, omega, Q.h, field)) for f, c in Q.entries.items() if f[0] != Q.h and c
    )


def _terms_met01(Q2: BivariateCompositionEnumerator, omega2: BivariateDegreeDistribution,
                 field: FieldSpec) -> Prepared:
    return _prepare(
        (c, pi_fAfB_exact(fa, fb, omega2, Q2.hA, Q2.hB, field))
        for (fa, fb), c in Q2.entries.items() if (fa[0] != Q2.hA or fb[0] != Q2.hB) and c
    )


def ub_gfq(A: WeightEnumerator, omega: DegreeDistribution, k: int, delta: int, q: int) -> mpf:
    _check_delta(k, delta)
    return _power_sum(_terms_gfq(A, omega, q), k + delta) / (q - 1)


def ub_met(A: BivariateWeightEnumerator, omega2: BivariateDegreeDistribution, k: int, delta: int, q: int) -> mpf:
    _check_delta(k, delta)
    return _power_sum(_terms_met(A, omega2, q), k + delta) / (q - 1)


def ub_gfq01(Q: CompositionEnumerator, omega: DegreeDistribution, k: int, delta: int, field: FieldSpec) -> mpf:
    _check_delta(k, delta)
    return _power_sum(_terms_gfq01(Q, omega, field), k + delta) / (field.q - 1)


def ub_met01(Q2: BivariateCompositionEnumerator, omega2: BivariateDegreeDistribution, k: int, delta: int,
             field: FieldSpec) -> mpf:
    _check_delta(k, delta)
    return _power_sum(_terms_met01(Q2, omega2, field), k + delta) / (field.q - 1)


def lrfc_pf_bound(delta: int, q: int) -> mpf:
    """Linear random fountain code reference q^(-delta) / (q - 1)."""
    return mpf(q) ** (-delta) / (q - 1)


# ---- lower bounds -----------------------------------------------------------------

def _terms_s2(J: JointEnumerator, omega: DegreeDistribution, field: FieldSpec, method: str) -> Prepared:
    if J.kind == "biweight":
        kernel = pair_probability_binary_triplets if method == "triplets" else pair_probability_binary
        return _prepare((c, kernel(tau, omega, J.h)) for tau, c in J.entries.items() if c)
    if field.p != 2:
        predicted = len(J.entries) * sum(count_compositions(j, field.q ** 2) for j, _ in omega.pairs)
        check_feasible("joint-composition sum for S2", predicted, config.KEY_LIMIT)
    return _prepare((c, pair_probability_exact(kappa, omega, J.h, field)) for kappa, c in J.entries.items() if c)


def s2_binary(J: JointEnumerator, omega: DegreeDistribution, m: int, method: str = "krawtchouk") -> mpf:
    if J.kind != "biweight":
        raise ValueError("s2_binary needs a biweight enumerator")
    return _power_sum(_terms_s2(J, omega, None, method), m) / 2


def s2_gfq01(S: JointEnumerator, omega: DegreeDistribution, m: int, field: FieldSpec) -> mpf:
    if S.kind == "biweight":
        return s2_binary(S, omega, m)
    if S.q != field.q:
        raise ValueError("joint enumerator and field disagree on q")
    return _power_sum(_terms_s2(S, omega, field, "krawtchouk"), m) / (2 * (field.q - 1) ** 2)


def dawson_sankoff(s1, s2) -> mpf:
    s1, s2 = to_mpf(s1), to_mpf(s2)
    if s1 < 0 or s2 < 0:
        raise ValueError("Dawson-Sankoff needs nonnegative S1, S2")
    if s1 == 0:
        return mpf(0)
    ratio = 2 * s2 / s1
    theta = ratio - mp.floor(ratio)
    return theta * s1 ** 2 / ((2 - theta) * s1 + 2 * s2) + (1 - theta) * s1 ** 2 / ((1 - theta) * s1 + 2 * s2)


def dawson_sankoff_r(s1, s2, r: int) -> mpf:
    """2 S1 / (r + 1) - 2 S2 / (r (r + 1)); maximal at r = 1 + floor(2 S2 / S1)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    s1, s2 = to_mpf(s1), to_mpf(s2)
    return 2 * s1 / (r + 1) - 2 * s2 / (r * (r + 1))


# ---- suite -------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteConfig:
    construction: Construction
    k: int
    lrfc: bool = False
    s2_method: str = "krawtchouk"


@dataclass
class SuiteEnumerators:
    weight: Optional[WeightEnumerator] = None
    bivariate_weight: Optional[BivariateWeightEnumerator] = None
    composition: Optional[CompositionEnumerator] = None
    bivariate_composition: Optional[BivariateCompositionEnumerator] = None
    joint: Optional[JointEnumerator] = None


def _missing(name: str, variant: str):
    return ConfigError(f"construction {variant} needs a {name} enumerator", field="enumerators")


def _upper_terms(cfg: SuiteConfig, enums: SuiteEnumerators) -> Prepared:
    con = cfg.construction
    field = con.field
    q = field.q
    if con.variant == "gfq":
        if enums.weight is None:
            raise _missing("weight", con.variant)
        return _terms_gfq(enums.weight, con.omega, q)
    if con.variant == "met":
        if enums.bivariate_weight is None:
            raise _missing("bivariate weight", con.variant)
        return _terms_met(enums.bivariate_weight, con.omega, q)
    if con.variant == "gfq01":
        Q = enums.composition
        if Q is None and q == 2 and enums.weight is not None:
            Q = enumerators.composition_from_weight(enums.weight, 2)
        if Q is None:
            raise _missing("composition", con.variant)
        return _terms_gfq01(Q, con.omega, field)
    Q2 = enums.bivariate_composition
    if Q2 is None and q == 2 and enums.bivariate_weight is not None:
        Q2 = enumerators.bivariate_composition_from_weight(enums.bivariate_weight, 2)
    if Q2 is None:
        raise _missing("bivariate composition", con.variant)
    return _terms_met01(Q2, con.omega, field)


def _lower_terms(cfg: SuiteConfig, enums: SuiteEnumerators) -> Optional[Prepared]:
    con = cfg.construction
    if enums.joint is None or con.multi_edge:
        return None
    if con.variant == "gfq" and con.field.q != 2:
        return None
    return _terms_s2(enums.joint, con.omega, con.field, cfg.s2_method)


def _running_max_from_right(values: List[mpf]) -> List[mpf]:
    out = list(values)
    best = mpf(0)
    for i in range(len(out) - 1, -1, -1):
        best = max(best, out[i])
        out[i] = best
    return out


def bound_suite(cfg: SuiteConfig, enums: SuiteEnumerators, deltas: Sequence[int]) -> List[BoundResult]:
    """Upper bound, Bonferroni and Dawson-Sankoff lower bounds for each overhead."""
    deltas = sorted(set(int(d) for d in deltas))
    if not deltas or deltas[0] < 0:
        raise ConfigError("delta range must be nonempty and nonnegative", field="delta")
    con = cfg.construction
    q = con.field.q
    upper_terms = _upper_terms(cfg, enums)
    lower_terms = _lower_terms(cfg, enums)
    s2_scale = 2 if enums.joint is not None and enums.joint.kind == "biweight" else 2 * (q - 1) ** 2
    logger.info("bound suite %s q=%d k=%d: %d upper terms, %s lower terms", con.variant, q, cfg.k,
                len(upper_terms), "no" if lower_terms is None else len(lower_terms))

    s1s, s2s = [], []
    for d in deltas:
        m = cfg.k + d
        s1s.append(_power_sum(upper_terms, m) / (q - 1))
        s2s.append(None if lower_terms is None else _power_sum(lower_terms, m) / s2_scale)

    for prev, cur in zip(s1s, s1s[1:]):
        if cur > prev * (1 + _CLAMP):
            raise ArithmeticError("upper bound increased with the overhead")

    results = []
    if lower_terms is None:
        for d, s1 in zip(deltas, s1s):
            results.append(BoundResult(d, s1, None, s1, lrfc=lrfc_pf_bound(d, q) if cfg.lrfc else None,
                                       flags=("upper",) + (("lrfc",) if cfg.lrfc else ())))
        return results

    raw_bonf = [s1 - s2 for s1, s2 in zip(s1s, s2s)]
    raw_ds = [dawson_sankoff(s1, s2) for s1, s2 in zip(s1s, s2s)]
    bonf = _running_max_from_right(raw_bonf)
    ds = _running_max_from_right(raw_ds)
    for i, d in enumerate(deltas):
        results.append(BoundResult(
            delta=d, s1=s1s[i], s2=s2s[i], upper=s1s[i],
            lower_bonferroni=bonf[i], lower_dawson_sankoff=ds[i],
            raw_bonferroni=raw_bonf[i], raw_dawson_sankoff=raw_ds[i],
            lrfc=lrfc_pf_bound(d, q) if cfg.lrfc else None,
            flags=("upper", "bonferroni", "dawson_sankoff") + (("lrfc",) if cfg.lrfc else ()),
        ))
    return results
