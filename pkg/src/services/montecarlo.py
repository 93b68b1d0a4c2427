"""Monte Carlo failure-rate campaigns for single Raptor codes and ensembles."""
import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import nullcontext
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betainc

from .. import config
from ..models import Campaign, RaptorInstance, SimResult
from .outercodes import sample_code
from .raptor import failure_verdicts

logger = logging.getLogger(__name__)

CP_TOL = 1e-12
BOOTSTRAP_RESAMPLES = 1000

# spawn keys separating code sampling and bootstrap streams from trial streams
_CODE_STREAM = 1
_BOOTSTRAP_STREAM = 2


def trial_rng(master_seed: int, delta: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, delta, trial_index]))


def _beta_quantile(prob: float, a: float, b: float) -> float:
    lo, hi = 0.0, 1.0
    while hi - lo > CP_TOL:
        mid = (lo + hi) / 2
        if betainc(a, b, mid) < prob:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def clopper_pearson(failures: int, trials: int, level: float = 0.95) -> Tuple[float, float]:
    """Exact binomial interval from inverted regularized incomplete beta functions."""
    if trials < 1 or not 0 <= failures <= trials:
        raise ValueError(f"invalid counts: failures={failures}, trials={trials}")
    if not 0 < level < 1:
        raise ValueError("confidence level must lie in (0, 1)")
    alpha = 1 - level
    p_hat = failures / trials
    low = 0.0 if failures == 0 else _beta_quantile(alpha / 2, failures, trials - failures + 1)
    high = 1.0 if failures == trials else _beta_quantile(1 - alpha / 2, failures + 1, trials - failures)
    return min(low, p_hat), max(high, p_hat)


def bootstrap_mean_ci(rates: Sequence[float], n_resamples: int, level: float,
                      rng: np.random.Generator) -> Tuple[float, float]:
    """Percentile bootstrap interval of the mean of per-code failure rates."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise ValueError("bootstrap needs at least one rate")
    idx = rng.integers(0, rates.size, size=(n_resamples, rates.size))
    means = rates[idx].mean(axis=1)
    alpha = 1 - level
    low, high = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    mean = float(rates.mean())
    return min(float(low), mean), max(float(high), mean)


def _run_block(instance: RaptorInstance, m: int, master_seed: int, delta: int,
               start: int, stop: int, decoder: str) -> List[bool]:
    rngs = (trial_rng(master_seed, delta, t) for t in range(start, stop))
    return failure_verdicts(instance, m, rngs, decoder)


def _verdicts(executor: Optional[Executor], threads: int, instance: RaptorInstance, m: int,
              master_seed: int, delta: int, start: int, stop: Optional[int], decoder: str) -> Iterator[bool]:
    """Verdicts of trials start, start+1, ... in index order; stop=None runs until the consumer quits."""
    block = config.TRIAL_BLOCK
    pos = start
    while stop is None or pos < stop:
        bounds = []
        for _ in range(threads):
            if stop is not None and pos >= stop:
                break
            end = pos + block if stop is None else min(pos + block, stop)
            bounds.append((pos, end))
            pos = end
        args = [(instance, m, master_seed, delta, a, b, decoder) for a, b in bounds]
        if executor is None:
            results = (_run_block(*a) for a in args)
        else:
            results = executor.map(_run_block, *zip(*args))
        for verdicts in results:
            yield from verdicts


def _pool(threads: int):
    return ProcessPoolExecutor(max_workers=threads) if threads > 1 else nullcontext()


def run_single(campaign: Campaign, threads: Optional[int] = None) -> List[SimResult]:
    """Per delta, decode until target_failures or max_trials, whichever comes first."""
    if campaign.instance is None:
        raise ValueError("run_single needs a fixed instance")
    threads = threads or config.THREADS
    instance = campaign.instance
    k = instance.outer.k
    out = []
    with _pool(threads) as executor:
        for delta in campaign.deltas:
            trials = failures = 0
            stream = _verdicts(executor, threads, instance, k + delta, campaign.master_seed, delta,
                               0, campaign.max_trials or None, campaign.decoder)
            for failed in stream:
                trials += 1
                failures += failed
                if campaign.target_failures and failures >= campaign.target_failures:
                    break
            stream.close()
            out.append(_result(delta, trials, failures, campaign.level))
            logger.info("delta=%d trials=%d failures=%d p_hat=%.6g", delta, trials, failures, out[-1].p_hat)
    return out


def _result(delta: int, trials: int, failures: int, level: float, codes_above_k: int = 0) -> SimResult:
    if trials == 0:
        return SimResult(delta, 0, 0, 0.0, 0.0, 1.0, codes_above_k)
    low, high = clopper_pearson(failures, trials, level)
    return SimResult(delta, trials, failures, failures / trials, low, high, codes_above_k)


def run_ensemble(campaign: Campaign, threads: Optional[int] = None) -> List[SimResult]:
    """Mean failure rate over n_codes sampled outer codes with m = k + delta received symbols.

    Code c uses trial indices c*T .. c*T + T - 1 (T = trials_per_code), so a single
    explicit code reproduces run_single with max_trials = T. The same trials are also
    decoded with m = k_C + delta per code; that tally is `failures_at_kc`.
    """
    spec = campaign.ensemble
    if spec is None:
        raise ValueError("run_ensemble needs an ensemble spec")
    threads = threads or config.THREADS
    T = campaign.trials_per_code

    instances = []
    above = 0
    for c in range(campaign.n_codes):
        rng = np.random.default_rng(np.random.SeedSequence([campaign.master_seed, c], spawn_key=(_CODE_STREAM,)))
        code = sample_code(spec, rng)
        logger.debug("code %d: k_C=%d", c, code.k)
        if code.k > spec.k:
            above += 1
        instances.append(RaptorInstance(code, campaign.construction))
    if above:
        logger.warning("%d of %d sampled codes have k_C > k=%d", above, campaign.n_codes, spec.k)

    out = []
    with _pool(threads) as executor:
        for delta in campaign.deltas:
            m = spec.k + delta
            per_code = [
                sum(_verdicts(executor, threads, inst, m, campaign.master_seed, delta, c * T, (c + 1) * T,
                              campaign.decoder))
                for c, inst in enumerate(instances)
            ]
            failures = int(sum(per_code))
            at_kc = failures + sum(
                sum(_verdicts(executor, threads, inst, inst.outer.k + delta, campaign.master_seed, delta, c * T,
                              (c + 1) * T, campaign.decoder)) - per_code[c]
                for c, inst in enumerate(instances) if inst.outer.k != spec.k
            )
            trials = T * campaign.n_codes
            p_hat = failures / trials
            if campaign.n_codes == 1:
                low, high = clopper_pearson(failures, trials, campaign.level)
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence([campaign.master_seed, delta], spawn_key=(_BOOTSTRAP_STREAM,)))
                low, high = bootstrap_mean_ci([f / T for f in per_code], BOOTSTRAP_RESAMPLES, campaign.level, rng)
                low, high = min(low, p_hat), max(high, p_hat)
            out.append(SimResult(delta, trials, failures, p_hat, low, high, above, failures_at_kc=int(at_kc)))
            logger.info("delta=%d codes=%d trials=%d failures(m=k+delta)=%d failures(m=k_C+delta)=%d p_hat=%.6g",
                        delta, campaign.n_codes, trials, failures, at_kc, p_hat)
    return out
