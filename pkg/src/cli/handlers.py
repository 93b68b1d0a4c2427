import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .. import config, repository
from ..errors import ConfigError, FeasibilityError
from ..galois import FieldSpec, field_new, field_of_order
from ..models import (
    BivariateDegreeDistribution,
    Campaign,
    Construction,
    DegreeDistribution,
    LinearCode,
    OuterEnsembleSpec,
    RaptorInstance,
)
from ..services import bounds, enumerators, errexp, montecarlo, outercodes, raptor

logger = logging.getLogger(__name__)

_OUTER_PATTERNS = (
    r"hamming:\d+",
    r"uniform-pc:\d+:\d+",
    r"ldpc:\d+:\d+:\d+",
    r"file:.+",
)
ENUMERATOR_KINDS = ("weight", "bivariate_weight", "composition", "bivariate_composition",
                    "biweight", "bicomposition")


def _int_range(text: str) -> List[int]:
    start, stop, step = (int(x) for x in text.split(":"))
    if step < 1 or stop < start:
        raise ValueError("need start <= stop and step >= 1")
    return list(range(start, stop + 1, step))


def _float_range(text: str) -> List[float]:
    start, stop, step = (Fraction(x) for x in text.split(":"))
    if step <= 0 or stop < start:
        raise ValueError("need start <= stop and step > 0")
    n = int((stop - start) / step)
    return [float(start + i * step) for i in range(n + 1)]


# 命令行参数的校验模型
class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Literal["bound", "simulate", "enumerate", "errexp", "oracle"]
    construction: Literal["gfq", "met", "gfq01", "met01"] = "gfq"
    gf: str = "2"  # q 或 p^m
    modulus: Optional[int] = None
    outer: str = "uniform-pc:10:8"
    dist: str = "r10"
    ha: Optional[int] = None
    delta: str = "0:10:1"
    seed: int = Field(default=0, ge=0)
    target_failures: Optional[int] = Field(default=None, ge=1)
    max_trials: Optional[int] = Field(default=None, ge=1)
    n_codes: int = Field(default=1, ge=1)
    trials_per_code: int = Field(default=1, ge=1)
    level: float = Field(default=0.95, gt=0, lt=1)
    decoder: Literal["ge", "inactivation"] = "ge"
    threads: int = Field(default_factory=lambda: config.THREADS, ge=1)
    lrfc: bool = False
    s2_method: Literal["krawtchouk", "triplets"] = "krawtchouk"
    which: str = "weight"
    dump_code: Optional[str] = None
    rates: str = "0.95"
    eps: str = "0:0.1:0.001"
    kernel: Literal["pi_limit", "varrho"] = "pi_limit"
    out: str = "out.csv"

    @field_validator("outer")
    @classmethod
    def _outer_form(cls, v: str) -> str:
        if not any(re.fullmatch(p, v) for p in _OUTER_PATTERNS):
            raise ValueError("expected hamming:t | uniform-pc:h:k | ldpc:dv:dc:h | file:path")
        return v

    @field_validator("gf")
    @classmethod
    def _gf_form(cls, v: str) -> str:
        if not re.fullmatch(r"\d+(\^\d+)?", v):
            raise ValueError("expected q or p^m")
        return v

    @field_validator("delta")
    @classmethod
    def _delta_form(cls, v: str) -> str:
        _int_range(v)
        return v

    @field_validator("eps")
    @classmethod
    def _eps_form(cls, v: str) -> str:
        if min(_float_range(v)) < 0:
            raise ValueError("epsilon must be >= 0")
        return v

    @field_validator("rates")
    @classmethod
    def _rates_form(cls, v: str) -> str:
        if any(not 0 < float(r) <= 1 for r in v.split(",")):
            raise ValueError("rates must lie in (0, 1]")
        return v

    @field_validator("which")
    @classmethod
    def _which_form(cls, v: str) -> str:
        if v not in ENUMERATOR_KINDS:
            raise ValueError(f"expected one of {ENUMERATOR_KINDS}")
        return v

    @model_validator(mode="after")
    def _split_given(self):
        if self.construction in ("met", "met01") and self.ha is None and self.command != "errexp":
            raise ValueError("multi-edge constructions need --ha")
        return self

    @property
    def deltas(self) -> List[int]:
        return _int_range(self.delta)

    @property
    def eps_grid(self) -> List[float]:
        return _float_range(self.eps)

    @property
    def rate_list(self) -> List[float]:
        return [float(r) for r in self.rates.split(",")]


# ---- 参数解析 ---------------------------------------------------------------

@dataclass(frozen=True)
class OuterChoice:
    spec: OuterEnsembleSpec
    hamming_t: Optional[int] = None

    @property
    def explicit(self) -> bool:
        return self.spec.variant == "explicit"


def resolve_field(cfg: RunConfig) -> FieldSpec:
    try:
        if "^" in cfg.gf:
            p, m = (int(x) for x in cfg.gf.split("^"))
            return field_new(p, m, cfg.modulus)
        return field_of_order(int(cfg.gf), cfg.modulus)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), field="field") from exc


def resolve_outer(cfg: RunConfig, field: FieldSpec) -> OuterChoice:
    kind, _, rest = cfg.outer.partition(":")
    try:
        if kind == "hamming":
            t = int(rest)
            if field.q != 2:
                raise ConfigError("Hamming outer codes are binary", field="outer")
            code = outercodes.hamming_generator(t)
            return OuterChoice(OuterEnsembleSpec("explicit", field, code.h, code.k, code=code), t)
        if kind == "uniform-pc":
            h, k = (int(x) for x in rest.split(":"))
            return OuterChoice(OuterEnsembleSpec("uniform-pc", field, h, k))
        if kind == "ldpc":
            dv, dc, h = (int(x) for x in rest.split(":"))
            if dv >= dc:
                raise ConfigError("LDPC ensemble needs dv < dc", field="outer")
            k = h - h * dv // dc
            return OuterChoice(OuterEnsembleSpec("ldpc", field, h, k, dv=dv, dc=dc))
        q, mat = repository.load_matrix(rest)
        if q != field.q:
            raise ConfigError(f"{rest} is over GF({q}) but the field is GF({field.q})", field="outer")
        code = outercodes.code_from_generator(field, mat)
        return OuterChoice(OuterEnsembleSpec("explicit", field, code.h, code.k, code=code))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), field="outer") from exc


def resolve_dist(cfg: RunConfig):
    if cfg.dist == "r10":
        return raptor.omega_r10()
    if cfg.dist == "rq-met":
        return raptor.omega_rq_bivariate(raptor.omega_r10())
    return repository.load_degree_distribution(cfg.dist)


def resolve_construction(cfg: RunConfig, field: FieldSpec, h: int) -> Construction:
    omega = resolve_dist(cfg)
    multi = cfg.construction in ("met", "met01")
    if multi != isinstance(omega, BivariateDegreeDistribution):
        raise ConfigError(f"construction {cfg.construction} does not match distribution {cfg.dist}", field="dist")
    try:
        if multi:
            return Construction(cfg.construction, field, omega, h, cfg.ha, h - cfg.ha)
        return Construction(cfg.construction, field, omega, h)
    except ValueError as exc:
        raise ConfigError(str(exc), field="construction") from exc


def _header(cfg: RunConfig, field: FieldSpec, outer: Optional[OuterChoice] = None) -> dict:
    # 头部只记录影响结果的参数
    out = {k: v for k, v in cfg.model_dump(exclude={"threads", "out"}).items() if v is not None}
    out["q"] = field.q
    if field.modulus is not None:
        out["modulus"] = field.modulus
    out["precision_bits"] = config.PRECISION_BITS
    if outer is not None:
        out["h"] = outer.spec.h
        out["k"] = outer.spec.k
    return out


# ---- 枚举子构造 -------------------------------------------------------------

def _average_weight(outer: OuterChoice):
    spec = outer.spec
    q = spec.field.q
    if spec.variant == "uniform-pc":
        return enumerators.uniform_pc_weight_enum(spec.h, spec.k, q)
    if spec.variant == "ldpc":
        return enumerators.ldpc_weight_enum(spec.dv, spec.dc, spec.h, q)
    raise ConfigError(f"no average enumerator for outer {spec.variant}", field="outer")


def _explicit_enumerator(outer: OuterChoice, which: str, hA: Optional[int]):
    code = outer.spec.code
    q = code.field.q
    if outer.hamming_t is not None:
        if which == "weight":
            return outercodes.hamming_weight_enum_recursive(code.h)
        if which == "biweight":
            return outercodes.hamming_biweight(outer.hamming_t)
    if which == "weight":
        return outercodes.weight_enumerator_of(code)
    if which in ("bivariate_weight", "bivariate_composition"):
        split = outercodes.bivariate_weight_of(code, hA)
        if which == "bivariate_weight":
            return split
        if q == 2:
            return enumerators.bivariate_composition_from_weight(split, 2)
    elif which == "composition" and q == 2:
        return enumerators.composition_from_weight(outercodes.weight_enumerator_of(code), 2)
    return outercodes.exhaustive_enumerators(code, which, hA)


def build_enumerator(outer: OuterChoice, which: str, hA: Optional[int] = None):
    """Expected enumerator of an ensemble or exact enumerator of an explicit code."""
    spec = outer.spec
    q = spec.field.q
    if which in ("bivariate_weight", "bivariate_composition"):
        if hA is None or not 0 <= hA <= spec.h:
            raise ConfigError(f"{which} needs 0 <= --ha <= {spec.h}", field="ha")
    if spec.variant == "explicit":
        return _explicit_enumerator(outer, which, hA)

    if which == "biweight":
        if q != 2:
            raise ConfigError("biweight enumerators are binary", field="which")
        if spec.variant == "uniform-pc":
            return enumerators.uniform_pc_joint_weight_binary(spec.h, spec.k)
        raise ConfigError("no pair enumerator for the LDPC ensemble", field="which")
    if which == "bicomposition":
        if spec.variant == "uniform-pc":
            return enumerators.uniform_pc_bicomposition(spec.h, spec.k, q)
        raise ConfigError(f"no bicomposition enumerator for outer {spec.variant}", field="which")

    A = _average_weight(outer)
    if which == "weight":
        return A
    if which == "composition":
        return enumerators.composition_from_weight(A, q)
    split = enumerators.met_split_weight_enum(A, hA, spec.h - hA)
    if which == "bivariate_weight":
        return split
    return enumerators.bivariate_composition_from_weight(split, q)


def _pair_kind(con: Construction) -> Optional[str]:
    if con.multi_edge:
        return None
    if con.field.q == 2:
        return "biweight"
    return "bicomposition" if con.zero_one else None


def suite_enumerators(outer: OuterChoice, con: Construction) -> bounds.SuiteEnumerators:
    needed = {"gfq": "weight", "met": "bivariate_weight", "gfq01": "composition",
              "met01": "bivariate_composition"}[con.variant]
    enums = bounds.SuiteEnumerators()
    setattr(enums, needed, build_enumerator(outer, needed, con.hA))
    pair = _pair_kind(con)
    if pair is not None:
        try:
            enums.joint = build_enumerator(outer, pair)
        except (FeasibilityError, ConfigError) as exc:
            logger.warning("lower bounds omitted: %s", exc)
    return enums


# ---- 子命令 ----------------------------------------------------------------

# 1. 上下界
def cmd_bound(cfg: RunConfig) -> str:
    field = resolve_field(cfg)
    outer = resolve_outer(cfg, field)
    con = resolve_construction(cfg, field, outer.spec.h)
    enums = suite_enumerators(outer, con)
    suite = bounds.SuiteConfig(con, outer.spec.k, lrfc=cfg.lrfc, s2_method=cfg.s2_method)
    results = bounds.bound_suite(suite, enums, cfg.deltas)
    return repository.write_bounds_csv(cfg.out, results, _header(cfg, field, outer), lrfc=cfg.lrfc)


# 2. Monte Carlo 仿真
def cmd_simulate(cfg: RunConfig) -> str:
    field = resolve_field(cfg)
    outer = resolve_outer(cfg, field)
    con = resolve_construction(cfg, field, outer.spec.h)
    try:
        if outer.explicit and cfg.n_codes == 1:
            campaign = Campaign(tuple(cfg.deltas), cfg.seed, cfg.target_failures, cfg.max_trials,
                                instance=RaptorInstance(outer.spec.code, con), level=cfg.level,
                                decoder=cfg.decoder)
            results = montecarlo.run_single(campaign, cfg.threads)
        else:
            max_trials = cfg.max_trials or cfg.n_codes * cfg.trials_per_code
            campaign = Campaign(tuple(cfg.deltas), cfg.seed, cfg.target_failures, max_trials,
                                ensemble=outer.spec, construction=con, n_codes=cfg.n_codes,
                                trials_per_code=cfg.trials_per_code, level=cfg.level, decoder=cfg.decoder)
            results = montecarlo.run_ensemble(campaign, cfg.threads)
    except ValueError as exc:
        raise ConfigError(str(exc), field="stop rule") from exc
    return repository.write_simulation_csv(cfg.out, results, _header(cfg, field, outer))


def _outer_code(outer: OuterChoice, seed: int) -> LinearCode:
    if outer.explicit:
        return outer.spec.code
    rng = np.random.default_rng(seed)
    return outercodes.sample_code(outer.spec, rng)


# 3. 枚举子导出
def cmd_enumerate(cfg: RunConfig) -> str:
    field = resolve_field(cfg)
    outer = resolve_outer(cfg, field)
    if cfg.dump_code:
        code = _outer_code(outer, cfg.seed)
        repository.store_matrix(repository.resolve_output(cfg.dump_code), field.q, code.generator,
                                header=_header(cfg, field, outer))
        logger.info("outer generator (%d x %d) written to %s", code.k, code.h, cfg.dump_code)
    enum = build_enumerator(outer, cfg.which, cfg.ha)
    path = repository.resolve_output(cfg.out)
    repository.export_enumerator(path, enum, q=field.q, header=_header(cfg, field, outer))
    return path


# 4. 误差指数
def cmd_errexp(cfg: RunConfig) -> str:
    field = resolve_field(cfg)
    omega = resolve_dist(cfg)
    if not isinstance(omega, DegreeDistribution):
        raise ConfigError("error exponents need a univariate distribution", field="dist")
    rows: List[Tuple[float, float, float]] = []
    summary = []
    for rate in cfg.rate_list:
        shape = errexp.uniform_pc_shape(rate, field.q)
        kernel = errexp.AsymptoticKernel(cfg.kernel, omega, field.q)
        rows += [(rate, e, v) for e, v in errexp.errexp_curve(cfg.eps_grid, omega, shape, kernel)]
        try:
            eps_star = errexp.ml_threshold_upper(omega, shape, kernel)
            summary.append(f"threshold R={rate} eps*={eps_star!r}")
        except ArithmeticError as exc:
            summary.append(f"threshold R={rate} none ({exc})")
    for line in summary:
        print(line)
    return repository.write_errexp_csv(cfg.out, rows, _header(cfg, field), summary,
                                       with_rate=len(cfg.rate_list) > 1)


# 5. 精确 oracle
def cmd_oracle(cfg: RunConfig) -> str:
    field = resolve_field(cfg)
    outer = resolve_outer(cfg, field)
    con = resolve_construction(cfg, field, outer.spec.h)
    code = _outer_code(outer, cfg.seed)
    instance = RaptorInstance(code, con)
    small = field.q ** code.k <= 16
    rows = []
    for delta in cfg.deltas:
        m = code.k + delta
        exact = raptor.exact_pf_tuples(instance, m)
        other = raptor.exact_pf_inclusion_exclusion(instance, m) if small else None
        if other is not None and other != exact:
            raise ArithmeticError(f"oracles disagree at delta={delta}: {exact} vs {other}")
        logger.info("delta=%d exact P_F=%s", delta, exact)
        rows.append((delta, exact, other))
    return repository.write_oracle_csv(cfg.out, rows, _header(cfg, field, outer))
