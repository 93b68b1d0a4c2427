"""Raptor constructions: LT column sampling, ML failure test, inactivation
decoding and exact failure-probability oracles.

The channel is never simulated: a receiver holding m symbols is modelled by m
fresh i.i.d. columns, and only the rank of G_o times those columns matters.
"""
import itertools
import logging
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .. import config
from ..errors import check_feasible
from ..galois import FieldSpec
from ..models import (
    BivariateDegreeDistribution,
    Construction,
    DegreeDistribution,
    LinearCode,
    LTColumn,
    RaptorInstance,
)
from .outercodes import parity_check_of, rank, rank_gf2_packed, row_reduce

logger = logging.getLogger(__name__)

_SCALE = 1 << 64

# R10 output degree distribution, coefficients scaled by 10^4
_R10 = ((1, 98), (2, 4590), (3, 2110), (4, 1134), (10, 1113), (11, 799), (40, 156))


def omega_r10() -> DegreeDistribution:
    return DegreeDistribution(tuple((d, Fraction(c, 10 ** 4)) for d, c in _R10))


def omega_rq_bivariate(base: DegreeDistribution) -> BivariateDegreeDistribution:
    """Omega(x) (z^2 + z^3) / 2."""
    return BivariateDegreeDistribution(tuple((j, s, p / 2) for j, p in base.pairs for s in (2, 3)))


# ---- sampling --------------------------------------------------------------

@lru_cache(maxsize=64)
def _thresholds(probs: Tuple[Fraction, ...]) -> np.ndarray:
    """floor(cdf * 2^64), capped at 2^64 - 1; a draw u picks the first index with u <= threshold."""
    out = []
    acc = Fraction(0)
    for p in probs:
        acc += p
        out.append(min(acc.numerator * _SCALE // acc.denominator, _SCALE - 1))
    out[-1] = _SCALE - 1
    return np.array(out, dtype=np.uint64)


def _draw_indices(probs: Tuple[Fraction, ...], rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.integers(0, _SCALE - 1, size=size, dtype=np.uint64, endpoint=True)
    return np.searchsorted(_thresholds(probs), u, side="left")


def sample_degrees(omega: DegreeDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    degrees = np.array([d for d, _ in omega.pairs])
    return degrees[_draw_indices(tuple(p for _, p in omega.pairs), rng, size)]


def _partial_fisher_yates(n: int, d: int, rng: np.random.Generator) -> List[int]:
    if d > n:
        raise ValueError(f"degree {d} exceeds the {n} available rows")
    if d == 0:
        return []
    offsets = rng.integers(0, n - np.arange(d))
    moved: Dict[int, int] = {}
    out = []
    for i, r in enumerate(offsets):
        j = i + int(r)
        vi, vj = moved.get(i, i), moved.get(j, j)
        moved[i], moved[j] = vj, vi
        out.append(vj)
    return out


def _coefficients(construction: Construction, d: int, rng: np.random.Generator) -> Tuple[int, ...]:
    if construction.zero_one or construction.field.q == 2:
        return (1,) * d
    return tuple(int(c) for c in rng.integers(1, construction.field.q, size=d))


def sample_columns(construction: Construction, m: int, rng: np.random.Generator) -> List[LTColumn]:
    if m == 0:
        return []
    if construction.multi_edge:
        omega2 = construction.omega
        picks = _draw_indices(tuple(p for _, _, p in omega2.triples), rng, m)
        cols = []
        for idx in picks:
            j, s, _ = omega2.triples[int(idx)]
            rows = _partial_fisher_yates(construction.hA, j, rng)
            rows += [construction.hA + r for r in _partial_fisher_yates(construction.hB, s, rng)]
            cols.append(LTColumn(tuple(rows), _coefficients(construction, j + s, rng)))
        return cols
    cols = []
    for d in sample_degrees(construction.omega, rng, m):
        rows = _partial_fisher_yates(construction.h, int(d), rng)
        cols.append(LTColumn(tuple(rows), _coefficients(construction, int(d), rng)))
    return cols


def sample_column(construction: Construction, rng: np.random.Generator) -> LTColumn:
    return sample_columns(construction, 1, rng)[0]


# ---- ML failure ----------------------------------------------------------------

@lru_cache(maxsize=32)
def _packed_generator_columns(outer: LinearCode) -> Tuple[int, ...]:
    g = outer.generator
    return tuple(
        sum(1 << int(r) for r in np.flatnonzero(g[:, c]))
        for c in range(outer.h)
    )


def _reduce_add(field: FieldSpec, arr: np.ndarray) -> np.ndarray:
    """Field sum along axis 1."""
    if field.p == 2:
        return np.bitwise_xor.reduce(arr, axis=1)
    if field.m == 1:
        return arr.sum(axis=1) % field.p
    out = arr[:, 0]
    for i in range(1, arr.shape[1]):
        out = field.add_vec(out, arr[:, i])
    return out


def column_images(outer: LinearCode, columns: Sequence[LTColumn]) -> np.ndarray:
    """m x k matrix whose rows are G_o @ c for each column c."""
    field = outer.field
    out = np.zeros((len(columns), outer.k), dtype=np.int64)
    for n, col in enumerate(columns):
        if not col.indices:
            continue
        sub = outer.generator[:, list(col.indices)]
        out[n] = _reduce_add(field, field.mul_vec(sub, np.asarray(col.coefs)[None, :]))
    return out


def ml_failure(instance: RaptorInstance, columns: Sequence[LTColumn]) -> bool:
    """True iff rank(G_o @ G_LT) < k."""
    outer = instance.outer
    k = outer.k
    if len(columns) < k:
        return True
    if outer.field.q == 2:
        gcols = _packed_generator_columns(outer)
        rows = []
        for col in columns:
            v = 0
            for i in col.indices:
                v ^= gcols[i]
            rows.append(v)
        return rank_gf2_packed(rows, stop_at=k) < k
    return rank(column_images(outer, columns), outer.field) < k


@lru_cache(maxsize=32)
def _parity_equations(outer: LinearCode) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    H = parity_check_of(outer)
    return tuple(
        tuple((int(v), int(row[v])) for v in np.flatnonzero(row))
        for row in H
    )


def inactivation_solve(instance: RaptorInstance, columns: Sequence[LTColumn]) -> bool:
    """Same verdict as ml_failure, through peeling plus inactivation on the
    intermediate-symbol system [H; G_LT^T] v = [0; y]."""
    outer = instance.outer
    field = outer.field
    h = outer.h
    eqs: List[Dict[int, int]] = [dict(zip(c.indices, c.coefs)) for c in columns]
    eqs += [dict(row) for row in _parity_equations(outer)]

    holders: Dict[int, set] = {v: set() for v in range(h)}
    for e, eq in enumerate(eqs):
        for v in eq:
            holders[v].add(e)
    alive = set(range(len(eqs)))
    active = set(range(h))
    active_count = [len(eq) for eq in eqs]
    inactive: List[int] = []
    solved = 0

    while active:
        pivot = next((e for e in sorted(alive) if active_count[e] == 1), None)
        if pivot is None:
            # stall: inactivate the variable of maximum residual degree, lowest index first
            x = min(active, key=lambda v: (-len(holders[v]), v))
            active.remove(x)
            inactive.append(x)
            for e in holders[x]:
                active_count[e] -= 1
            continue

        eq = eqs[pivot]
        x = next(v for v in eq if v in active)
        alive.remove(pivot)
        for v in eq:
            holders[v].discard(pivot)
        cx = eq[x]
        for e in list(holders[x]):
            other = eqs[e]
            factor = field.div(other[x], cx)
            for v, c in eq.items():
                new = field.sub(other.get(v, 0), field.mul(factor, c))
                if new:
                    if v not in other:
                        holders[v].add(e)
                        if v in active:
                            active_count[e] += 1
                    other[v] = new
                elif v in other:
                    del other[v]
                    holders[v].discard(e)
                    if v in active:
                        active_count[e] -= 1
        active.remove(x)
        solved += 1

    residual_rank = 0
    if inactive and alive:
        pos = {v: i for i, v in enumerate(inactive)}
        dense = np.zeros((len(alive), len(inactive)), dtype=np.int64)
        for r, e in enumerate(sorted(alive)):
            for v, c in eqs[e].items():
                dense[r, pos[v]] = c
        residual_rank = rank(dense, field)
    logger.debug("inactivation: solved=%d inactive=%d residual rank=%d", solved, len(inactive), residual_rank)
    return solved + residual_rank < h


def failure_verdicts(instance: RaptorInstance, m: int, rngs: Iterable[np.random.Generator],
                     decoder: str = "ge") -> List[bool]:
    """One decoding attempt with m fresh columns per generator."""
    decide = inactivation_solve if decoder == "inactivation" else ml_failure
    return [decide(instance, sample_columns(instance.construction, m, rng)) for rng in rngs]


# ---- exact oracles ---------------------------------------------------------------

def _realization_count(construction: Construction) -> int:
    q = construction.field.q
    per = 1 if construction.zero_one else q - 1
    if construction.multi_edge:
        return sum(comb(construction.hA, j) * comb(construction.hB, s) * per ** (j + s)
                   for j, s, _ in construction.omega.triples)
    return sum(comb(construction.h, d) * per ** d for d, _ in construction.omega.pairs)


def _coefficient_choices(construction: Construction, d: int):
    if construction.zero_one:
        return [(1,) * d]
    return list(itertools.product(construction.field.nonzero(), repeat=d))


def column_image_distribution(instance: RaptorInstance) -> Dict[Tuple[int, ...], Fraction]:
    """Exact law of G_o @ c over every column realization."""
    con = instance.construction
    check_feasible("column realizations", _realization_count(con), config.BRUTE_LIMIT)
    outer = instance.outer
    dist: Dict[Tuple[int, ...], Fraction] = defaultdict(Fraction)

    def add(rows, coef_sets, weight):
        for coefs in coef_sets:
            img = column_images(outer, [LTColumn(tuple(rows), coefs)])[0]
            dist[tuple(int(v) for v in img)] += weight

    if con.multi_edge:
        for j, s, p in con.omega.triples:
            coef_sets = _coefficient_choices(con, j + s)
            weight = p / (comb(con.hA, j) * comb(con.hB, s) * len(coef_sets))
            for ra in itertools.combinations(range(con.hA), j):
                for rb in itertools.combinations(range(con.hA, con.h), s):
                    add(ra + rb, coef_sets, weight)
    else:
        for d, p in con.omega.pairs:
            coef_sets = _coefficient_choices(con, d)
            weight = p / (comb(con.h, d) * len(coef_sets))
            for rows in itertools.combinations(range(con.h), d):
                add(rows, coef_sets, weight)
    return dict(dist)


def _span_key(field: FieldSpec, rows: Sequence[Tuple[int, ...]]) -> Tuple[Tuple[int, ...], ...]:
    rr = row_reduce(np.array(rows, dtype=np.int64), field)
    return tuple(tuple(int(v) for v in rr.rref[i]) for i in range(rr.rank))


def exact_pf_tuples(instance: RaptorInstance, m: int) -> Fraction:
    """Exact failure probability by enumerating column tuples, merging prefixes with equal span."""
    outer = instance.outer
    field = outer.field
    k = outer.k
    images = column_image_distribution(instance)
    full = "full"
    states: Dict[object, Fraction] = {(): Fraction(1)}
    transitions: Dict[Tuple[object, Tuple[int, ...]], object] = {}
    for _ in range(m):
        check_feasible("column-tuple enumeration", len(states) * len(images), config.BRUTE_LIMIT)
        nxt: Dict[object, Fraction] = defaultdict(Fraction)
        for state, ps in states.items():
            if state == full:
                nxt[full] += ps
                continue
            for w, pw in images.items():
                key = (state, w)
                if key not in transitions:
                    if not any(w):
                        transitions[key] = state
                    else:
                        span = _span_key(field, list(state) + [w])
                        transitions[key] = full if len(span) == k else span
                nxt[transitions[key]] += ps * pw
        states = dict(nxt)
    return sum((p for s, p in states.items() if s != full), Fraction(0))


def exact_pf_inclusion_exclusion(instance: RaptorInstance, m: int) -> Fraction:
    """Pr{exists u != 0 : u G_o c_i = 0 for all i} over projective representatives u."""
    outer = instance.outer
    field = outer.field
    q, k = field.q, outer.k
    check_feasible("inclusion-exclusion message space", q ** k, 16)
    reps = [u for u in itertools.product(range(q), repeat=k)
            if any(u) and next(x for x in u if x) == 1]
    images = column_image_distribution(instance)
    by_mask: Dict[int, Fraction] = defaultdict(Fraction)
    for w, pw in images.items():
        mask = 0
        for e, u in enumerate(reps):
            acc = 0
            for ui, wi in zip(u, w):
                acc = field.add(acc, field.mul(ui, wi))
            if acc == 0:
                mask |= 1 << e
        by_mask[mask] += pw
    total = Fraction(0)
    for subset in range(1, 1 << len(reps)):
        p_s = sum((p for mask, p in by_mask.items() if mask & subset == subset), Fraction(0))
        sign = 1 if bin(subset).count("1") % 2 else -1
        total += sign * p_s ** m
    return total
