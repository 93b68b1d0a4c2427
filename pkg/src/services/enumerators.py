"""Exact combinatorics and enumerator formulas.

Every count in this module is a Python int or a Fraction; floating point only
appears downstream in the bounds.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
from sympy import Poly, symbols

from .. import config
from ..errors import check_feasible
from ..galois import FieldSpec
from ..models import (
    BivariateCompositionEnumerator,
    BivariateWeightEnumerator,
    Composition,
    CompositionEnumerator,
    JointComposition,
    JointEnumerator,
    JointWeight,
    WeightEnumerator,
)

logger = logging.getLogger(__name__)

_x = symbols("x")


# ---- binomials, Krawtchouk, compositions ------------------------------------

@lru_cache(maxsize=None)
def krawtchouk(j: int, x: int, n: int, q: int) -> int:
    """K_j(x; n, q) = sum_i (-1)^i C(x,i) C(n-x, j-i) (q-1)^(j-i)."""
    if not (0 <= j <= n and 0 <= x <= n):
        raise ValueError(f"krawtchouk arguments out of range: j={j}, x={x}, n={n}")
    return sum(
        (-1) ** i * comb(x, i) * comb(n - x, j - i) * (q - 1) ** (j - i)
        for i in range(0, min(j, x) + 1)
    )


def multinomial(h: int, parts: Sequence[int]) -> int:
    if any(p < 0 for p in parts) or sum(parts) != h:
        raise ValueError(f"parts {tuple(parts)} do not sum to {h}")
    out = factorial(h)
    for p in parts:
        out //= factorial(p)
    return out


def count_compositions(h: int, n_parts: int) -> int:
    return comb(h + n_parts - 1, n_parts - 1)


def compositions_iter(h: int, n_parts: int) -> Iterator[Composition]:
    """All compositions of h into n_parts nonnegative parts, lexicographic order."""
    if n_parts < 1:
        raise ValueError("n_parts must be >= 1")
    if n_parts == 1:
        yield (h,)
        return
    for first in range(h + 1):
        for rest in compositions_iter(h - first, n_parts - 1):
            yield (first,) + rest


def composition_weight(f: Composition) -> int:
    return sum(f[1:])


def b_indicator(f: Composition, field: FieldSpec) -> int:
    """1 iff f_i copies of alpha^(i-1), i >= 1, sum to zero."""
    return _b_indicator(tuple(f[1:]), field)


@lru_cache(maxsize=1 << 16)
def _b_indicator(tail: Tuple[int, ...], field: FieldSpec) -> int:
    acc = 0
    for i, n in enumerate(tail, start=1):
        if n:
            acc = field.add(acc, field.int_scale(n, field.element_of_index(i)))
    return int(acc == 0)


# ---- joint compositions -----------------------------------------------------

def gamma_projections(kappa: JointComposition) -> Tuple[Composition, Composition]:
    rows = tuple(sum(r) for r in kappa.cells)
    cols = tuple(sum(r[t] for r in kappa.cells) for t in range(kappa.q))
    return rows, cols


def tau_of_kappa(kappa: JointComposition) -> JointWeight:
    return JointWeight(
        kappa.cells[0][0],
        sum(kappa.block1()),
        sum(kappa.block2()),
        sum(sum(r) for r in kappa.block3()),
    )


def kappa_of_tau(tau: JointWeight) -> JointComposition:
    return JointComposition(((tau.t0, tau.t1), (tau.t2, tau.t3)))


def is_circulant_permutation_pattern(matrix: Sequence[Sequence[int]], allow_incomplete: bool) -> bool:
    """True iff the 0/1 pattern is P_b (or, if allowed, a nonzero subset of P_b) for some shift b."""
    n = len(matrix)
    ones = {(s, t) for s in range(n) for t in range(n) if matrix[s][t]}
    if not ones:
        return False
    for b in range(n):
        shifted = {(s, (s + b) % n) for s in range(n)}
        if ones == shifted or (allow_incomplete and ones <= shifted):
            return True
    return False


def in_K_qh(kappa: JointComposition) -> bool:
    k1 = any(kappa.block1())
    k2 = any(kappa.block2())
    b3 = kappa.block3()
    k3 = any(any(r) for r in b3)
    if k1 + k2 + k3 >= 2:
        return True
    if not k1 and not k2 and k3:
        return not is_circulant_permutation_pattern(b3, allow_incomplete=True)
    return False


def in_T_2h(tau: JointWeight) -> bool:
    return (tau.t1 > 0) + (tau.t2 > 0) + (tau.t3 > 0) >= 2


def joint_compositions_iter(j: int, q: int) -> Iterator[JointComposition]:
    n_parts = q * q
    check_feasible(f"joint compositions of {j} over GF({q})", count_compositions(j, n_parts), config.KEY_LIMIT)
    for flat in compositions_iter(j, n_parts):
        yield JointComposition(tuple(flat[r * q:(r + 1) * q] for r in range(q)))


# ---- ensemble enumerators ---------------------------------------------------

def uniform_pc_weight_enum(h: int, k: int, q: int) -> WeightEnumerator:
    if not 0 < k <= h:
        raise ValueError(f"need 0 < k <= h, got k={k}, h={h}")
    scale = Fraction(1, q ** (h - k))
    counts = [Fraction(1)] + [comb(h, l) * (q - 1) ** l * scale for l in range(1, h + 1)]
    return WeightEnumerator(h, tuple(counts))


def lt_weight_enum(k: int, q: int) -> WeightEnumerator:
    """All vectors of GF(q)^k; with h = k the Raptor bound is the LT bound."""
    return WeightEnumerator(k, tuple(comb(k, l) * (q - 1) ** l for l in range(k + 1)))


def composition_from_weight(A: WeightEnumerator, q: int) -> CompositionEnumerator:
    """Q_f = A_l * multinomial(l; f_1..f_{q-1}) / (q-1)^l for composition-symmetric ensembles."""
    h = A.h
    check_feasible(f"compositions of {h} into {q} parts", count_compositions(h, q), config.KEY_LIMIT)
    entries: Dict[Composition, Fraction] = {}
    for l in range(h + 1):
        if A[l] == 0:
            continue
        scale = A[l] / Fraction(q - 1) ** l
        for tail in compositions_iter(l, q - 1):
            entries[(h - l,) + tail] = scale * multinomial(l, tail)
    logger.debug("composition enumerator h=%d q=%d keys=%d", h, q, len(entries))
    return CompositionEnumerator(h, q, entries)


def bivariate_composition_from_weight(A: BivariateWeightEnumerator, q: int) -> BivariateCompositionEnumerator:
    hA, hB = A.hA, A.hB
    predicted = count_compositions(hA, q) * count_compositions(hB, q)
    check_feasible("bivariate compositions", predicted, config.KEY_LIMIT)
    tails: Dict[int, List[Tuple[Composition, int]]] = {}

    def tails_of(l: int):
        if l not in tails:
            tails[l] = [(t, multinomial(l, t)) for t in compositions_iter(l, q - 1)]
        return tails[l]

    entries = {}
    for l in range(hA + 1):
        for t in range(hB + 1):
            a = A[l, t]
            if a == 0:
                continue
            scale = a / Fraction(q - 1) ** (l + t)
            for ta, ma in tails_of(l):
                for tb, mb in tails_of(t):
                    entries[((hA - l,) + ta, (hB - t,) + tb)] = scale * ma * mb
    return BivariateCompositionEnumerator(hA, hB, q, entries)


def marginalize_composition(Q: CompositionEnumerator) -> WeightEnumerator:
    out = [Fraction(0)] * (Q.h + 1)
    for f, c in Q.entries.items():
        out[composition_weight(f)] += c
    return WeightEnumerator(Q.h, tuple(out))


def ldpc_weight_enum(dv: int, dc: int, h: int, q: int) -> WeightEnumerator:
    """Average weight enumerator of the regular (dv, dc) LDPC ensemble over GF(q)."""
    if dv < 1 or dc < 1 or (h * dv) % dc:
        raise ValueError(f"h*dv must be divisible by dc (h={h}, dv={dv}, dc={dc})")
    n_checks = h * dv // dc
    check_feasible("LDPC polynomial degree", h * dv, 10 ** 4)
    # q * p(x) has integer coefficients
    base = Poly((1 + (q - 1) * _x) ** dc + (q - 1) * (1 - _x) ** dc, _x)
    coeffs = [int(c) for c in reversed((base ** n_checks).all_coeffs())]
    denom = q ** n_checks
    counts = []
    for l in range(h + 1):
        e = l * dv
        c = coeffs[e] if e < len(coeffs) else 0
        counts.append(Fraction(comb(h, l) * c, denom * comb(h * dv, e) * (q - 1) ** (l * (dv - 1))))
    return WeightEnumerator(h, tuple(counts))


def ldpc_composition_enum(dv: int, dc: int, h: int, q: int) -> CompositionEnumerator:
    return composition_from_weight(ldpc_weight_enum(dv, dc, h, q), q)


def uniform_pc_bicomposition(h: int, k: int, q: int) -> JointEnumerator:
    """S_kappa = C(h; kappa) q^(-2(h-k)) over kappa in K_{q,h}."""
    scale = Fraction(1, q ** (2 * (h - k)))
    entries = {}
    for kappa in joint_compositions_iter(h, q):
        if in_K_qh(kappa):
            flat = [c for row in kappa.cells for c in row]
            entries[kappa] = multinomial(h, flat) * scale
    return JointEnumerator("bicomposition", h, q, entries)


def uniform_pc_joint_weight_binary(h: int, k: int) -> JointEnumerator:
    scale = Fraction(1, 4 ** (h - k))
    entries = {}
    for t in compositions_iter(h, 4):
        tau = JointWeight(*t)
        if in_T_2h(tau):
            entries[tau] = multinomial(h, t) * scale
    return JointEnumerator("biweight", h, 2, entries)


def met_split_weight_enum(A: WeightEnumerator, hA: int, hB: int) -> BivariateWeightEnumerator:
    if hA + hB != A.h or hA < 0 or hB < 0:
        raise ValueError(f"split {hA}+{hB} does not match length {A.h}")
    grid = [
        [Fraction(comb(hA, a) * comb(hB, b), comb(A.h, a + b)) * A[a + b] for b in range(hB + 1)]
        for a in range(hA + 1)
    ]
    return BivariateWeightEnumerator(hA, hB, tuple(tuple(r) for r in grid))


# ---- MacWilliams -------------------------------------------------------------

@lru_cache(maxsize=None)
def _substitution_row(l: int, n: int, q: int) -> Tuple[int, ...]:
    """Coefficients of (1 - x)^l (1 + (q-1)x)^(n-l)."""
    poly = Poly(1 - _x, _x) ** l * Poly(1 + (q - 1) * _x, _x) ** (n - l)
    coeffs = [int(c) for c in reversed(poly.all_coeffs())]
    return tuple(coeffs + [0] * (n + 1 - len(coeffs)))


def macwilliams_bivariate(A: BivariateWeightEnumerator, k: int, q: int) -> BivariateWeightEnumerator:
    """Bivariate enumerator of the dual of an (hA + hB, k) code."""
    if any(c.denominator != 1 for row in A.counts for c in row):
        raise ValueError("MacWilliams transform needs the integer enumerator of an actual code")
    hA, hB = A.hA, A.hB
    out = [[0] * (hB + 1) for _ in range(hA + 1)]
    for l in range(hA + 1):
        row_a = _substitution_row(l, hA, q)
        for t in range(hB + 1):
            a = int(A[l, t])
            if a == 0:
                continue
            row_b = _substitution_row(t, hB, q)
            for i in range(hA + 1):
                if row_a[i] == 0:
                    continue
                ai = a * row_a[i]
                for s in range(hB + 1):
                    out[i][s] += ai * row_b[s]
    scale = q ** k
    result = []
    for row in out:
        vals = []
        for v in row:
            if v % scale or v < 0:
                raise ValueError("MacWilliams output is not a nonnegative integer enumerator; input is not a code")
            vals.append(Fraction(v // scale))
        result.append(tuple(vals))
    B = BivariateWeightEnumerator(hA, hB, tuple(result))
    if B.total() != q ** (hA + hB - k):
        raise ValueError("MacWilliams output total does not match q^(h-k)")
    return B


def macwilliams_univariate(A: WeightEnumerator, k: int, q: int) -> WeightEnumerator:
    grid = BivariateWeightEnumerator(A.h, 0, tuple((c,) for c in A.counts))
    B = macwilliams_bivariate(grid, k, q)
    return WeightEnumerator(A.h, tuple(row[0] for row in B.counts))


# Hadamard images of the four pair types on (x, y, z) with w = 1
_JOINT_SIGNS = ((1, 1, 1), (-1, 1, -1), (1, -1, -1), (-1, -1, 1))


def _expand_joint_term(tau: Sequence[int], h: int) -> np.ndarray:
    poly = np.zeros((h + 1,) * 3, dtype=object)
    poly[0, 0, 0] = 1
    degree = 0
    for count, (sx, sy, sz) in zip(tau, _JOINT_SIGNS):
        for _ in range(count):
            top = min(degree + 2, h + 1)
            cur = poly[:top, :top, :top].copy()
            block = poly[:top, :top, :top]
            block[1:, :, :] += sx * cur[:-1, :, :]
            block[:, 1:, :] += sy * cur[:, :-1, :]
            block[:, :, 1:] += sz * cur[:, :, :-1]
            degree += 1
    return poly


def joint_macwilliams_binary(entries: Dict[JointWeight, int], h: int, k: int) -> Dict[JointWeight, int]:
    """Complete biweight enumerator of the dual of a binary (h, k) code.

    `entries` must count every ordered pair of codewords, zero and equal pairs included.
    """
    total = sum(entries.values())
    if total != 4 ** k:
        raise ValueError(f"complete biweight enumerator must count 4^{k} pairs, got {total}")
    acc = np.zeros((h + 1,) * 3, dtype=object)
    for tau, n in entries.items():
        if sum(tau) != h:
            raise ValueError(f"joint weight {tau} does not sum to h={h}")
        acc += int(n) * _expand_joint_term(tau, h)
    scale = 4 ** k
    out: Dict[JointWeight, int] = {}
    for i in range(h + 1):
        for j in range(h + 1 - i):
            for l in range(h + 1 - i - j):
                v = acc[i, j, l]
                if v:
                    if v % scale:
                        raise ValueError("joint MacWilliams output is not integral")
                    out[JointWeight(h - i - j - l, i, j, l)] = v // scale
    return out


def restrict_joint(kind: str, h: int, q: int, entries: Dict[object, Fraction]) -> JointEnumerator:
    """Keep keys of linearly independent nonzero pairs; the rest is summed into `excluded`."""
    kept = {}
    excluded = Fraction(0)
    for key, c in entries.items():
        ok = in_T_2h(key) if kind == "biweight" else in_K_qh(key)
        if ok:
            kept[key] = Fraction(c)
        else:
            excluded += c
    return JointEnumerator(kind, h, q, kept, excluded)
