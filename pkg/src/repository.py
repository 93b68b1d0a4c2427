import csv
import logging
import os
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import pandas as pd

from . import config
from .errors import ConfigError
from .models import (
    BivariateCompositionEnumerator,
    BivariateDegreeDistribution,
    BivariateWeightEnumerator,
    BoundResult,
    CompositionEnumerator,
    DegreeDistribution,
    JointComposition,
    JointEnumerator,
    JointWeight,
    SimResult,
    WeightEnumerator,
)

logger = logging.getLogger(__name__)

NORMALIZE_TOL = Fraction(1, 10 ** 9)
DIGITS = 17

Enumerator = Union[WeightEnumerator, BivariateWeightEnumerator, CompositionEnumerator,
                   BivariateCompositionEnumerator, JointEnumerator]


def resolve_output(path: str) -> str:
    """Bare file names land in OUTPUT_DIR; parent directories are created."""
    if not os.path.dirname(path):
        path = os.path.join(config.OUTPUT_DIR, path)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return path


def _write_header(fh, header: Mapping[str, object]) -> None:
    for key, value in header.items():
        fh.write(f"# {key}={value}\n")


def _data_lines(path: str) -> Iterable[Tuple[int, List[str]]]:
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield n, line.split()


# Matrix files

def load_matrix(path: str) -> Tuple[int, np.ndarray]:
    """Read `q rows cols` followed by `rows` lines of canonical element values."""
    lines = list(_data_lines(path))
    if not lines:
        raise ConfigError(f"{path}: empty matrix file", field="outer")
    try:
        q, rows, cols = (int(x) for x in lines[0][1])
        body = [[int(x) for x in tok] for _, tok in lines[1:]]
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed matrix file ({exc})", field="outer") from exc
    if len(body) != rows or any(len(r) != cols for r in body):
        raise ConfigError(f"{path}: expected a {rows}x{cols} matrix", field="outer")
    mat = np.array(body, dtype=np.int64).reshape(rows, cols)
    if mat.size and (mat.min() < 0 or mat.max() >= q):
        raise ConfigError(f"{path}: entries must lie in 0..{q - 1}", field="outer")
    return q, mat


def store_matrix(path: str, q: int, mat, header: Optional[Mapping[str, object]] = None) -> None:
    mat = np.asarray(mat, dtype=np.int64)
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, header or {})
        fh.write(f"{q} {mat.shape[0]} {mat.shape[1]}\n")
        for row in mat:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


# Degree distributions

def _normalized(values: Sequence[Fraction], path: str) -> List[Fraction]:
    total = sum(values, Fraction(0))
    if total == 1:
        return list(values)
    if abs(total - 1) > NORMALIZE_TOL:
        raise ConfigError(f"{path}: probabilities sum to {float(total)!r}, not 1", field="dist")
    logger.warning("%s: probabilities sum to %s; normalizing", path, total)
    return [v / total for v in values]


def load_degree_distribution(path: str) -> Union[DegreeDistribution, BivariateDegreeDistribution]:
    """Two columns (degree, probability) or three (j, s, probability) for multi-edge."""
    rows = list(_data_lines(path))
    widths = {len(tok) for _, tok in rows}
    if not rows or len(widths) != 1 or widths.pop() not in (2, 3):
        raise ConfigError(f"{path}: every line needs 2 or 3 fields", field="dist")
    try:
        keys = [tuple(int(x) for x in tok[:-1]) for _, tok in rows]
        probs = [Fraction(tok[-1]) for _, tok in rows]
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed distribution ({exc})", field="dist") from exc
    probs = _normalized(probs, path)
    try:
        if len(keys[0]) == 1:
            return DegreeDistribution(tuple((key[0], p) for key, p in zip(keys, probs)))
        return BivariateDegreeDistribution(tuple((j, s, p) for (j, s), p in zip(keys, probs)))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}", field="dist") from exc


def store_degree_distribution(path: str, omega: Union[DegreeDistribution, BivariateDegreeDistribution]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(omega, DegreeDistribution):
            for d, p in omega.pairs:
                fh.write(f"{d} {_decimal(p)}\n")
        else:
            for j, s, p in omega.triples:
                fh.write(f"{j} {s} {_decimal(p)}\n")


def _decimal(p: Fraction) -> str:
    """Exact decimal when the denominator allows it, else num/den."""
    den = p.denominator
    for prime in (2, 5):
        while den % prime == 0:
            den //= prime
    if den != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = 0
    while (p * 10 ** digits).denominator != 1:
        digits += 1
    if not digits:
        return str(p.numerator)
    # Fraction supports the "f" format spec only from Python 3.12; the value is
    # exact at this many digits, so format the scaled integer directly.
    s = str(abs((p * 10 ** digits).numerator)).rjust(digits + 1, "0")
    return f"{'-' if p < 0 else ''}{s[:-digits]}.{s[-digits:]}"


# Enumerator CSV

def _fraction_text(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def enumerator_kind(enum: Enumerator) -> str:
    if isinstance(enum, WeightEnumerator):
        return "weight"
    if isinstance(enum, BivariateWeightEnumerator):
        return "bivariate_weight"
    if isinstance(enum, CompositionEnumerator):
        return "composition"
    if isinstance(enum, BivariateCompositionEnumerator):
        return "bivariate_composition"
    return enum.kind


def _enumerator_rows(enum: Enumerator) -> Tuple[List, List[List]]:
    kind = enumerator_kind(enum)
    if kind == "weight":
        return [kind, 2, enum.h], [[l, c] for l, c in enumerate(enum.counts) if c]
    if kind == "bivariate_weight":
        return [kind, 2, enum.hA, enum.hB], [
            [l, t, c] for l, row in enumerate(enum.counts) for t, c in enumerate(row) if c
        ]
    if kind == "composition":
        return [kind, enum.q, enum.h], [[*f, c] for f, c in sorted(enum.entries.items())]
    if kind == "bivariate_composition":
        return [kind, enum.q, enum.hA, enum.hB], [
            [*fa, *fb, c] for (fa, fb), c in sorted(enum.entries.items())
        ]
    if kind == "biweight":
        return [kind, enum.q, enum.h], [[*key, c] for key, c in sorted(enum.entries.items())]
    return [kind, enum.q, enum.h], [
        [*(x for row in key.cells for x in row), c]
        for key, c in sorted(enum.entries.items(), key=lambda kv: kv[0].cells)
    ]


def export_enumerator(path: str, enum: Enumerator, q: Optional[int] = None,
                      header: Optional[Mapping[str, object]] = None) -> None:
    """`# key=value` lines, a row `kind,q,h[,hB]`, then one row per key with the count as num/den."""
    first, rows = _enumerator_rows(enum)
    if q is not None:
        first[1] = q
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_header(fh, header or {})
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(first)
        for row in rows:
            writer.writerow([*row[:-1], _fraction_text(Fraction(row[-1]))])
    logger.info("wrote %s enumerator with %d keys to %s", first[0], len(rows), path)


def load_enumerator(path: str) -> Enumerator:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        rows = [r for r in reader if r]
    kind, q = header[0], int(header[1])
    sizes = [int(x) for x in header[2:]]
    keys = [tuple(int(x) for x in r[:-1]) for r in rows]
    counts = [Fraction(r[-1]) for r in rows]

    if kind == "weight":
        (h,) = sizes
        dense = [Fraction(0)] * (h + 1)
        for (l,), c in zip(keys, counts):
            dense[l] = c
        return WeightEnumerator(h, tuple(dense))
    if kind == "bivariate_weight":
        hA, hB = sizes
        grid = [[Fraction(0)] * (hB + 1) for _ in range(hA + 1)]
        for (l, t), c in zip(keys, counts):
            grid[l][t] = c
        return BivariateWeightEnumerator(hA, hB, tuple(tuple(r) for r in grid))
    if kind == "composition":
        (h,) = sizes
        return CompositionEnumerator(h, q, dict(zip(keys, counts)))
    if kind == "bivariate_composition":
        hA, hB = sizes
        return BivariateCompositionEnumerator(
            hA, hB, q, {(key[:q], key[q:]): c for key, c in zip(keys, counts)}
        )
    if kind == "biweight":
        (h,) = sizes
        return JointEnumerator(kind, h, q, {JointWeight(*key): c for key, c in zip(keys, counts)})
    if kind == "bicomposition":
        (h,) = sizes
        entries = {
            JointComposition(tuple(key[i * q:(i + 1) * q] for i in range(q))): c
            for key, c in zip(keys, counts)
        }
        return JointEnumerator(kind, h, q, entries)
    raise ConfigError(f"{path}: unknown enumerator kind {kind!r}", field="enumerator")


# Result tables

def number_text(x) -> str:
    """17 significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, DIGITS, strip_zeros=False, min_fixed=-4, max_fixed=DIGITS)
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), f".{DIGITS}g")


def _write_table(path: str, header: Mapping[str, object], df: pd.DataFrame,
                 summary: Sequence[str] = ()) -> str:
    path = resolve_output(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_header(fh, header)
        df.to_csv(fh, index=False, lineterminator="\n")
        for line in summary:
            fh.write(f"# {line}\n")
    logger.info("wrote %d rows to %s", len(df), path)
    return path


def write_bounds_csv(path: str, results: Sequence[BoundResult], header: Mapping[str, object],
                     lrfc: bool = False) -> str:
    columns = ["delta", "s1", "s2", "upper", "lb_bonferroni", "lb_dawson_sankoff"]
    if lrfc:
        columns.append("lrfc")
    rows = []
    for r in results:
        row = [str(r.delta), number_text(r.s1), number_text(r.s2), number_text(r.upper),
               number_text(r.lower_bonferroni), number_text(r.lower_dawson_sankoff)]
        if lrfc:
            row.append(number_text(r.lrfc))
        rows.append(row)
    return _write_table(path, header, pd.DataFrame(rows, columns=columns))


def write_simulation_csv(path: str, results: Sequence[SimResult], header: Mapping[str, object]) -> str:
    """Ensemble results add `failures_kc` (m = k_C + delta) and `codes_above_k`."""
    ensemble = any(r.failures_at_kc is not None for r in results)
    columns = ["delta", "trials", "failures", "p_hat", "ci_low", "ci_high"]
    if ensemble:
        columns += ["failures_kc", "codes_above_k"]
    rows = []
    for r in results:
        row = [str(r.delta), str(r.trials), str(r.failures), number_text(r.p_hat),
               number_text(r.ci_low), number_text(r.ci_high)]
        if ensemble:
            row += [number_text(r.failures_at_kc), str(r.codes_above_k)]
        rows.append(row)
    df = pd.DataFrame(rows, columns=columns)
    return _write_table(path, header, df)


def write_errexp_csv(path: str, rows: Sequence[Tuple[float, float, float]], header: Mapping[str, object],
                     summary: Sequence[str] = (), with_rate: bool = False) -> str:
    """Rows are (rate, epsilon, bound); the rate column is written only for multi-rate runs."""
    df = pd.DataFrame(
        [[number_text(r), number_text(e), number_text(v)] for r, e, v in rows],
        columns=["rate", "epsilon", "bound_bits_per_symbol"],
    )
    if not with_rate:
        df = df.drop(columns="rate")
    return _write_table(path, header, df, summary)


def write_oracle_csv(path: str, rows: Sequence[Tuple[int, Fraction, Optional[Fraction]]],
                     header: Mapping[str, object]) -> str:
    df = pd.DataFrame(
        [[str(d), _fraction_text(a), number_text(a), "" if b is None else _fraction_text(b)] for d, a, b in rows],
        columns=["delta", "p_exact_fraction", "p_exact", "p_inclusion_exclusion"],
    )
    return _write_table(path, header, df)


def read_table(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_header(path: str) -> Dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition("=")
            out[key] = value
    return out
