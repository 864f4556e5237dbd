"""Monte Carlo sampling of products of rectangular complex Ginibre matrices.

Factor ``j`` of trial ``t`` draws from its own stream
``SeedSequence(seed, spawn_key=(t, j))``, so any subset of trials can be
generated in any order, on any number of threads, with identical results.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np
from scipy import stats

from .density import cdf as theory_cdf
from .errors import DomainError
from .stieltjes import GeneralParams, moments_series

__all__ = [
    "EnsembleConfig", "SampleResult", "EmpiricalStats", "EmpiricalCDF",
    "sample_product", "run_ensemble", "empirical_cdf", "ks_distance",
    "ks_two_sample", "moment_check", "histogram", "empirical_stats",
    "default_threads",
]

_DIRECT_MAX_M = 8
_MAX_RESAMPLES = 8


@dataclass(frozen=True)
class EnsembleConfig:
    N: int
    nu: tuple
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        nu = tuple(self.nu)
        if not nu or any(int(v) != v or v < 0 for v in nu):
            raise DomainError(f"nu must be a nonempty list of nonnegative integers, got {self.nu!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "nu", tuple(int(v) for v in nu))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def M(self):
        return len(self.nu)

    @property
    def dims(self):
        return (self.N,) + tuple(self.N + v for v in self.nu)


@dataclass(frozen=True)
class SampleResult:
    trial: int
    values: np.ndarray
    log_values: np.ndarray
    resamples: int = 0


@dataclass(frozen=True)
class EmpiricalStats:
    ks: float
    histogram: list
    pooled_count: int


def _ginibre(rng, rows, cols):
    z = rng.standard_normal((rows, cols, 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _haar(rng, n):
    q, r = np.linalg.qr(_ginibre(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def _rotations(config, rotate_seed):
    # fixed unitaries per factor, shared by all trials
    out = []
    for j in range(1, config.M + 1):
        rng = np.random.default_rng(np.random.SeedSequence(rotate_seed, spawn_key=(j,)))
        out.append((_haar(rng, config.dims[j]), _haar(rng, config.dims[j - 1])))
    return out


def _product_log_singular(config, trial, attempt, rotations):
    dims = config.dims
    log_scale = 0.0
    y = None
    for j in range(1, config.M + 1):
        key = (trial, j) if attempt == 0 else (trial, j, attempt)
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=key))
        x = _ginibre(rng, dims[j], dims[j - 1])
        if rotations is not None:
            u, v = rotations[j - 1]
            x = u @ x @ v
        y = x if y is None else x @ y
        if config.M > _DIRECT_MAX_M:
            norm = np.linalg.norm(y)
            y /= norm
            log_scale += math.log(norm)
    sv = np.linalg.svd(y, compute_uv=False)
    return sv, log_scale


def sample_product(config, trial_index, rotate_seed=None):
    """Scaled squared singular values of one product ``X_M ... X_1``.

    Values are divided by ``prod_{j>=1} N_j``. With ``rotate_seed`` every
    factor is replaced by ``U_j X_j V_j`` for fixed Haar unitaries drawn from
    that seed, which must not change the law.
    """
    if not 0 <= trial_index < config.trials:
        raise DomainError(f"trial_index must lie in [0, {config.trials}), got {trial_index!r}")
    rotations = None if rotate_seed is None else _rotations(config, rotate_seed)
    log_norm = math.fsum(math.log(n) for n in config.dims[1:])
    for attempt in range(_MAX_RESAMPLES):
        try:
            sv, log_scale = _product_log_singular(config, trial_index, attempt, rotations)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise np.linalg.LinAlgError(f"SVD failed {_MAX_RESAMPLES} times in trial {trial_index}")
    with np.errstate(divide="ignore"):
        logs = np.sort(2.0 * np.log(sv) + 2.0 * log_scale - log_norm)
    return SampleResult(trial_index, np.exp(logs), logs, attempt)


def default_threads():
    env = os.environ.get("GINPROD_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"GINPROD_THREADS must be a positive integer, got {env!r}")
        if n < 1:
            raise DomainError(f"GINPROD_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def run_ensemble(config, threads=None, rotate_seed=None):
    """All trials, returned in trial order regardless of ``threads``."""
    threads = threads or default_threads()
    if threads == 1:
        return [sample_product(config, t, rotate_seed) for t in range(config.trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: sample_product(config, t, rotate_seed), range(config.trials)))


def _pooled(results):
    if not results:
        raise DomainError("need at least one sample result")
    return np.sort(np.concatenate([r.values for r in results]))


class EmpiricalCDF:
    """Right-continuous step function of pooled values."""

    def __init__(self, values):
        self.values = np.sort(np.asarray(values, dtype=float))
        self.count = self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.count


def empirical_cdf(results):
    return EmpiricalCDF(_pooled(results))


def ks_distance(results, params):
    """Kolmogorov-Smirnov distance of the pooled values to the limiting law."""
    v = _pooled(results)
    n = v.size
    f = np.clip(theory_cdf(params, v), 0.0, 1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_two_sample(results_a, results_b):
    return float(stats.ks_2samp(_pooled(results_a), _pooled(results_b)).statistic)


def moment_check(results, params, k):
    """Pooled ``k``-th moment against the limiting value.

    The standard error is a leave-one-trial-out jackknife, since values of
    one trial are correlated.
    """
    if int(k) != k or not 1 <= k <= 4:
        raise DomainError(f"k must be an integer in [1, 4], got {k!r}")
    k = int(k)
    sums = np.array([np.sum(r.values ** k) for r in results])
    counts = np.array([r.values.size for r in results], dtype=float)
    sample = float(sums.sum() / counts.sum())
    theory = moments_series(GeneralParams((params.y,) * params.M), k)[k]
    n = len(results)
    if n > 1:
        loo = (sums.sum() - sums) / (counts.sum() - counts)
        se = float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    else:
        se = float("nan")
    z = (sample - theory) / se if se and math.isfinite(se) else float("nan")
    return {"k": k, "sample": sample, "theory": theory, "stderr": se, "z": z}


def histogram(results):
    """Freedman-Diaconis histogram as ``(centers, densities, edges)``."""
    v = _pooled(results)
    dens, edges = np.histogram(v, bins="fd", density=True)
    return 0.5 * (edges[1:] + edges[:-1]), dens, edges


def empirical_stats(results, params):
    centers, dens, _ = histogram(results)
    return EmpiricalStats(ks_distance(results, params),
                          [(float(c), float(d)) for c, d in zip(centers, dens)],
                          int(sum(r.values.size for r in results)))
