"""Outer codes: linear algebra over GF(q), Hamming codes, sampled ensembles and
exhaustive enumerators (the ground truth for every enumerator formula)."""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, check_feasible
from ..galois import FieldSpec, field_new
from ..models import (
    BivariateCompositionEnumerator,
    BivariateWeightEnumerator,
    CompositionEnumerator,
    JointComposition,
    JointEnumerator,
    JointWeight,
    LinearCode,
    OuterEnsembleSpec,
    WeightEnumerator,
)
from . import enumerators

logger = logging.getLogger(__name__)

SINGLE_LIMIT = 2 ** 16
PAIR_LIMIT = 2 ** 24


# ---- Gaussian elimination ---------------------------------------------------

@dataclass(frozen=True)
class RowReduceResult:
    rref: np.ndarray
    pivots: Tuple[int, ...]
    rank: int


@dataclass(frozen=True)
class SolveResult:
    solution: Optional[np.ndarray]
    rank: int
    consistent: bool
    unique: bool


def row_reduce(mat, field: FieldSpec) -> RowReduceResult:
    """Reduced row echelon form; the pivot is the first nonzero entry at or below the current row."""
    a = np.array(mat, dtype=np.int64, copy=True)
    if a.ndim != 2:
        raise ValueError("row_reduce expects a 2-D matrix")
    rows, cols = a.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = field.mul_vec(field.inv(int(a[r, c])), a[r])
        factors = a[:, c].copy()
        factors[r] = 0
        mask = factors != 0
        if mask.any():
            a[mask] = field.sub_vec(a[mask], field.mul_vec(factors[mask][:, None], a[r][None, :]))
        pivots.append(c)
        r += 1
    return RowReduceResult(a, tuple(pivots), r)


def rank(mat, field: FieldSpec) -> int:
    mat = np.asarray(mat)
    if field.q == 2 and mat.size:
        return rank_gf2_packed(pack_rows_gf2(mat))
    return row_reduce(mat, field).rank


def nullspace(mat, field: FieldSpec) -> np.ndarray:
    """Basis of {x : mat @ x = 0}, one vector per row."""
    mat = np.asarray(mat, dtype=np.int64)
    cols = mat.shape[1]
    rr = row_reduce(mat, field)
    free = [c for c in range(cols) if c not in rr.pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for b, f in enumerate(free):
        basis[b, f] = 1
        for i, pc in enumerate(rr.pivots):
            basis[b, pc] = field.neg(int(rr.rref[i, f]))
    return basis


def solve(mat, rhs, field: FieldSpec) -> SolveResult:
    """Solve mat @ x = rhs; deficiency is reported, never raised."""
    mat = np.asarray(mat, dtype=np.int64)
    rhs = np.asarray(rhs, dtype=np.int64).reshape(-1, 1)
    cols = mat.shape[1]
    rr = row_reduce(np.hstack([mat, rhs]), field)
    if cols in rr.pivots:
        return SolveResult(None, rr.rank - 1, False, False)
    x = np.zeros(cols, dtype=np.int64)
    for i, pc in enumerate(rr.pivots):
        x[pc] = rr.rref[i, cols]
    return SolveResult(x, rr.rank, True, rr.rank == cols)


def pack_rows_gf2(mat) -> List[int]:
    out = []
    for row in np.asarray(mat):
        value = 0
        for j in np.flatnonzero(row):
            value |= 1 << int(j)
        out.append(value)
    return out


def rank_gf2_packed(rows: Sequence[int], stop_at: Optional[int] = None) -> int:
    """Rank of bit-packed GF(2) rows; a whole row is added with one XOR."""
    basis: Dict[int, int] = {}
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                break
        if stop_at is not None and len(basis) >= stop_at:
            break
    return len(basis)


# ---- codes -----------------------------------------------------------------

def code_from_generator(field: FieldSpec, generator, parity_check=None) -> LinearCode:
    g = np.asarray(generator, dtype=np.int64)
    if g.shape[0] and rank(g, field) != g.shape[0]:
        raise ValueError("generator matrix does not have full row rank")
    return LinearCode(field, g, None if parity_check is None else np.asarray(parity_check, dtype=np.int64))


def parity_check_of(code: LinearCode) -> np.ndarray:
    """Full-rank parity-check matrix (a sampled H may carry dependent rows)."""
    if code.parity_check is not None:
        rr = row_reduce(code.parity_check, code.field)
        return rr.rref[: rr.rank]
    return nullspace(code.generator, code.field)


def dual_code(code: LinearCode) -> LinearCode:
    return LinearCode(code.field, parity_check_of(code), code.generator)


def left_multiply(code: LinearCode, m) -> LinearCode:
    """Same code, generator M @ G for an invertible k x k matrix M."""
    m = np.asarray(m, dtype=np.int64)
    if m.shape != (code.k, code.k) or rank(m, code.field) != code.k:
        raise ValueError("left_multiply needs an invertible k x k matrix")
    return LinearCode(code.field, code.field.matmul(m, code.generator), code.parity_check)


def hamming_parity_check(t: int) -> np.ndarray:
    if not 2 <= t <= 12:
        raise ConfigError(f"Hamming parameter t must lie in 2..12, got {t}", field="outer")
    h = 2 ** t - 1
    cols = np.arange(1, h + 1)
    return ((cols[None, :] >> np.arange(t)[:, None]) & 1).astype(np.int64)


def hamming_generator(t: int) -> LinearCode:
    field = field_new(2)
    H = hamming_parity_check(t)
    return LinearCode(field, nullspace(H, field), H)


def hamming_weight_enum_recursive(h: int) -> WeightEnumerator:
    """(i+1)A_{i+1} + A_i + (h-i+1)A_{i-1} = C(h,i), A_0 = 1, A_1 = 0."""
    t = (h + 1).bit_length() - 1
    if h < 3 or 2 ** t - 1 != h:
        raise ValueError(f"{h} is not a Hamming length 2^t - 1")
    a = [Fraction(0)] * (h + 2)
    a[0] = Fraction(1)
    for i in range(1, h):
        a[i + 1] = (Fraction(comb(h, i)) - a[i] - (h - i + 1) * a[i - 1]) / (i + 1)
    counts = tuple(a[: h + 1])
    if any(c.denominator != 1 for c in counts) or sum(counts) != 2 ** (h - t):
        raise ArithmeticError("Hamming recursion lost integrality")
    return WeightEnumerator(h, counts)


def sample_uniform_pc(h: int, k: int, field: FieldSpec, rng: np.random.Generator) -> LinearCode:
    """Code defined by an (h-k) x h parity-check matrix with i.i.d. uniform entries; k_C >= k."""
    H = rng.integers(0, field.q, size=(h - k, h), dtype=np.int64)
    G = nullspace(H, field)
    if G.shape[0] > k:
        logger.debug("uniform parity-check sample has k_C=%d > k=%d", G.shape[0], k)
    return LinearCode(field, G, H)


def sample_regular_ldpc(dv: int, dc: int, h: int, field: FieldSpec, rng: np.random.Generator) -> LinearCode:
    """Socket-permutation LDPC sample; labels on parallel edges are summed in the field."""
    if dv < 1 or dc < 1 or (h * dv) % dc:
        raise ConfigError(f"LDPC ensemble needs h*dv divisible by dc (h={h}, dv={dv}, dc={dc})", field="outer")
    n_edges = h * dv
    n_checks = n_edges // dc
    var_of_edge = np.repeat(np.arange(h), dv)
    check_of_edge = rng.permutation(n_edges) // dc
    labels = rng.integers(1, field.q, size=n_edges, dtype=np.int64)
    H = np.zeros((n_checks, h), dtype=np.int64)
    for v, c, lab in zip(var_of_edge, check_of_edge, labels):
        H[c, v] = field.add(int(H[c, v]), int(lab))
    return LinearCode(field, nullspace(H, field), H)


def sample_code(spec: OuterEnsembleSpec, rng: np.random.Generator) -> LinearCode:
    if spec.variant == "uniform-pc":
        return sample_uniform_pc(spec.h, spec.k, spec.field, rng)
    if spec.variant == "ldpc":
        return sample_regular_ldpc(spec.dv, spec.dc, spec.h, spec.field, rng)
    return spec.code


# ---- exhaustive enumerators -------------------------------------------------

def codewords(code: LinearCode, limit: int = SINGLE_LIMIT) -> np.ndarray:
    q, k = code.field.q, code.k
    check_feasible(f"codebook of a ({code.h},{k}) code over GF({q})", q ** k, limit)
    if k == 0:
        return np.zeros((1, code.h), dtype=np.int64)
    msgs = np.array(list(itertools.product(range(q), repeat=k)), dtype=np.int64)
    return code.field.matmul(msgs, code.generator)


def _composition_rows(words: np.ndarray, field: FieldSpec) -> np.ndarray:
    idx = field.index_array[words]
    return (idx[:, :, None] == np.arange(field.q)).sum(axis=1)


def _tally(rows: np.ndarray) -> Counter:
    out: Counter = Counter()
    if rows.size:
        keys, counts = np.unique(rows, axis=0, return_counts=True)
        for key, n in zip(keys, counts):
            out[tuple(int(v) for v in key)] += int(n)
    return out


def _pair_tally(words: np.ndarray, field: FieldSpec) -> Counter:
    """Joint compositions of all ordered codeword pairs, as flattened q x q tuples."""
    q = field.q
    idx = field.index_array[words]
    out: Counter = Counter()
    for row in idx:
        combined = row[None, :] * q + idx
        counts = (combined[:, :, None] == np.arange(q * q)).sum(axis=1)
        out.update(_tally(counts))
    return out


def complete_biweight(code: LinearCode) -> Dict[JointWeight, int]:
    """Biweight counts over every ordered pair, zero and equal pairs included."""
    if code.field.q != 2:
        raise ValueError("biweight enumerators are binary")
    words = codewords(code, limit=int(PAIR_LIMIT ** 0.5))
    return {JointWeight(*key): n for key, n in _pair_tally(words, code.field).items()}


def exhaustive_enumerators(code: LinearCode, which: str, hA: Optional[int] = None):
    """Ground-truth enumerator of `code` by full codebook (or codebook-pair) iteration."""
    field = code.field
    q = field.q
    if which in ("biweight", "bicomposition"):
        check_feasible("codeword pairs", q ** (2 * code.k), PAIR_LIMIT)
        words = codewords(code, limit=PAIR_LIMIT)
        raw = _pair_tally(words, field)
        if which == "biweight":
            if q != 2:
                raise ValueError("biweight enumerators are binary")
            entries = {JointWeight(*key): n for key, n in raw.items()}
        else:
            entries = {
                JointComposition(tuple(key[r * q:(r + 1) * q] for r in range(q))): n
                for key, n in raw.items()
            }
        return enumerators.restrict_joint(which, code.h, q, entries)

    words = codewords(code)
    if which == "weight":
        w = np.count_nonzero(words, axis=1)
        counts = np.bincount(w, minlength=code.h + 1)
        return WeightEnumerator(code.h, tuple(int(c) for c in counts))
    if which == "composition":
        tally = _tally(_composition_rows(words, field))
        return CompositionEnumerator(code.h, q, {f: Fraction(n) for f, n in tally.items()})
    if hA is None or not 0 <= hA <= code.h:
        raise ConfigError(f"{which} needs a split 0 <= hA <= {code.h}", field="split")
    hB = code.h - hA
    if which == "bivariate_weight":
        wa = np.count_nonzero(words[:, :hA], axis=1)
        wb = np.count_nonzero(words[:, hA:], axis=1)
        grid = np.zeros((hA + 1, hB + 1), dtype=np.int64)
        np.add.at(grid, (wa, wb), 1)
        return BivariateWeightEnumerator(hA, hB, tuple(tuple(int(c) for c in r) for r in grid))
    if which == "bivariate_composition":
        ca = _composition_rows(words[:, :hA], field)
        cb = _composition_rows(words[:, hA:], field)
        tally = _tally(np.hstack([ca, cb]))
        entries = {(key[:q], key[q:]): Fraction(n) for key, n in tally.items()}
        return BivariateCompositionEnumerator(hA, hB, q, entries)
    raise ConfigError(f"unknown enumerator kind {which}", field="which")


def hamming_biweight(t: int) -> JointEnumerator:
    """Biweight enumerator of the binary Hamming code through its simplex dual."""
    simplex = dual_code(hamming_generator(t))
    h = simplex.h
    dual_pairs = complete_biweight(simplex)
    full = enumerators.joint_macwilliams_binary(dual_pairs, h, simplex.k)
    logger.info("Hamming(%d,%d) biweight enumerator: %d joint weights", h, h - t, len(full))
    return enumerators.restrict_joint("biweight", h, 2, full)


def weight_enumerator_of(code: LinearCode) -> WeightEnumerator:
    """Exhaustive over whichever of the code and its dual is smaller."""
    q = code.field.q
    if q ** code.k <= SINGLE_LIMIT:
        return exhaustive_enumerators(code, "weight")
    dual = dual_code(code)
    check_feasible("dual codebook", q ** dual.k, SINGLE_LIMIT)
    return enumerators.macwilliams_univariate(exhaustive_enumerators(dual, "weight"), dual.k, q)


def bivariate_weight_of(code: LinearCode, hA: int) -> BivariateWeightEnumerator:
    q = code.field.q
    if q ** code.k <= SINGLE_LIMIT:
        return exhaustive_enumerators(code, "bivariate_weight", hA)
    dual = dual_code(code)
    check_feasible("dual codebook", q ** dual.k, SINGLE_LIMIT)
    return enumerators.macwilliams_bivariate(exhaustive_enumerators(dual, "bivariate_weight", hA), dual.k, q)


def joint_composition_of(r1: Sequence[int], r2: Sequence[int], field: FieldSpec) -> JointComposition:
    q = field.q
    cells = [[0] * q for _ in range(q)]
    for a, b in zip(r1, r2):
        cells[field.index_of_element(int(a))][field.index_of_element(int(b))] += 1
    return JointComposition(tuple(tuple(r) for r in cells))
