"""Synthetic Monte Carlo experiments that produce reference curves as CSV.

Each trial draws from its own generator seeded by ``(seed, trial_id)``, so
results do not depend on how trials are split across workers; chunks are
always reduced in trial order.
"""

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from . import bounds, estimators, sampler
from ._validation import DomainError, check_alpha, check_int, check_positive, check_uint64
from .sparsity import sparse_scale_constant

EXPERIMENTS = ("fig1-mse", "fig9-ratio", "fig10-mle", "bounds-surface")


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    alpha: float = 1.0
    eta: float = 2.0
    D: list = field(default_factory=lambda: [100, 500, 1000])
    beta_rule: str = "D-power:0.5"
    k: list = field(default_factory=lambda: [10, 20, 30, 40, 50, 60, 70, 80, 90, 100])
    trials: int = 10_000
    mu: float = 1.0
    n_jobs: int = 1
    output: str = "-"

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise DomainError(f"unknown experiment {self.name!r}; expected one of {EXPERIMENTS}")
        if self.seed is None:
            raise DomainError("experiments need an explicit --seed")
        self.seed = check_uint64(self.seed, "seed")
        self.trials = check_int(self.trials, "trials", minimum=2)
        self.n_jobs = check_int(self.n_jobs, "n_jobs", minimum=1)
        self.D = [check_int(d, "D", minimum=1) for d in np.atleast_1d(self.D)]
        self.k = [check_int(k, "k", minimum=1) for k in np.atleast_1d(self.k)]
        parse_beta_rule(self.beta_rule, 2)


def parse_beta_rule(rule, D):
    """``fixed:<beta>`` or ``D-power:<p>`` (beta = D^-p)."""
    kind, _, arg = str(rule).partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise DomainError(f"bad beta rule {rule!r}; use fixed:<beta> or D-power:<p>") from None
    if kind == "fixed":
        beta = value
    elif kind == "D-power":
        beta = float(D) ** -value
    else:
        raise DomainError(f"bad beta rule {rule!r}; use fixed:<beta> or D-power:<p>")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta rule {rule!r} gives beta={beta} outside (0, 1]")
    return beta


def pareto_data(n, D, eta, seed):
    """n x D matrix of Pareto(eta, 1) magnitudes with independent symmetric signs."""
    n = check_int(n, "n", minimum=1)
    D = check_int(D, "D", minimum=1)
    check_positive(eta, "eta")
    rows = np.arange(n, dtype=np.uint64)[:, None]
    cols = np.arange(D, dtype=np.uint64)[None, :]
    return sampler.sparse_entry_variates(eta, 1.0, 1.0, seed, rows, cols)


def _trial_rng(seed, trial):
    prefix = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    return np.random.default_rng([*prefix, trial])


def _run_chunked(fn, trials, n_jobs):
    edges = np.linspace(0, trials, min(trials, 4 * n_jobs) + 1).astype(int)
    chunks = list(zip(edges[:-1], edges[1:]))
    if n_jobs == 1:
        parts = [fn(a, b) for a, b in chunks]
    else:
        with ThreadPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), chunks))
    return np.concatenate(parts, axis=0)


def sparse_projection_trials(g, alpha, beta, k, trials, seed, mu=1.0, n_jobs=1):
    """Projected values ``sum_i z_ij g_i`` for fresh sparse Pareto matrices, shape (trials, k).

    Nonzero positions of each column are generated as a Bernoulli(beta) process
    through geometric gaps, so the work per column is O(beta D) rather than O(D).
    """
    g = np.asarray(g, dtype=np.float64)
    D = g.size
    budget = int(beta * D + 8.0 * math.sqrt(beta * D) + 16)

    def run(start, stop):
        out = np.empty((stop - start, k))
        for t in range(start, stop):
            rng = _trial_rng(seed, t)
            pos = np.cumsum(rng.geometric(beta, size=(k, budget)), axis=1)
            while np.any(pos[:, -1] <= D):
                more = np.cumsum(rng.geometric(beta, size=(k, budget)), axis=1)
                pos = np.concatenate([pos, pos[:, -1:] + more], axis=1)
            keep = pos <= D
            signs = np.where(rng.random(pos.shape) < 0.5, 1.0, -1.0)
            mags = mu * rng.random(pos.shape) ** (-1.0 / alpha)
            contrib = np.where(keep, g[np.minimum(pos, D) - 1] * signs * mags, 0.0)
            out[t - start] = contrib.sum(axis=1)
        return out

    return _run_chunked(run, trials, n_jobs)


def _gm_batch(x, alpha, k):
    with np.errstate(divide="ignore"):
        mean_log = np.log(np.abs(x[:, :k])).mean(axis=1)
    return np.exp(mean_log - estimators.gm_correction_log(k, alpha))


def fig1_mse(cfg):
    """Normalized MSE of sparse-projection l_alpha estimates vs k, per D."""
    alpha = check_alpha(cfg.alpha, include_upper=False)
    kmax = max(cfg.k)
    rows = []
    for D in cfg.D:
        beta = parse_beta_rule(cfg.beta_rule, D)
        g = pareto_data(1, D, cfg.eta, cfg.seed)[0]
        d = float(np.sum(np.abs(g) ** alpha)) ** (1.0 / alpha)
        x = sparse_projection_trials(g, alpha, beta, kmax, cfg.trials, [cfg.seed, D], cfg.mu, cfg.n_jobs)
        scale = cfg.mu * sparse_scale_constant(alpha) * beta ** (1.0 / alpha)
        for k in cfg.k:
            sq = (_gm_batch(x, alpha, k) / scale / d - 1.0) ** 2
            theory = estimators.gm_variance(k, alpha) if k * alpha > 2 else math.nan
            rows.append((D, k, beta, sq.mean(), sq.std(ddof=1) / math.sqrt(sq.size), theory))
    return ["D", "k", "beta", "mse", "mse_se", "theoretical_var"], rows


def _zero_plus_samples(seed, k, trials):
    counters = np.arange(trials * k, dtype=np.uint64)
    return sampler.zero_plus_variates(1.0, seed, k, counters).reshape(trials, k)


def fig9_ratio(cfg):
    """MSE(median) / MSE(geometric mean) in the alpha -> 0+ limit, simulated and by quadrature."""
    asym = 6.0 / (math.pi**2 * math.log(2.0) ** 2)
    rows = []
    for k in cfg.k:
        if k % 2 == 0 or k < 3:
            raise DomainError(f"fig9-ratio needs odd k >= 3, got {k}")
        z = _zero_plus_samples(cfg.seed, k, cfg.trials)
        me = np.median(z, axis=1) * math.log(2.0)
        gm = np.exp(np.log(z).mean(axis=1) - k * gammaln(1.0 - 1.0 / k))
        sim = np.mean((me - 1.0) ** 2) / np.mean((gm - 1.0) ** 2)
        quad = estimators.median_mse_zero_plus(k) / estimators.power_gm_variance(k) if k >= 5 else math.inf
        rows.append((k, sim, quad, asym))
    return ["k", "ratio_simulated", "ratio_quadrature", "ratio_asymptotic"], rows


def fig10_mle(cfg):
    """Empirical MSE of the bias-corrected zero-plus MLE against its asymptotic formula."""
    rows = []
    for k in cfg.k:
        if k < 3:
            raise DomainError(f"fig10-mle needs k >= 3, got {k}")
        z = _zero_plus_samples(cfg.seed, k, cfg.trials)
        mle = (k - 1) / np.sum(1.0 / z, axis=1)
        sq = (mle - 1.0) ** 2
        _, theory = estimators.mle_moment_asymptotics(k, 1.0, True)
        _, exact = estimators.mle_exact_moments(k, 1.0, True)
        rows.append(
            (k, sq.mean(), sq.std(ddof=1) / math.sqrt(sq.size), theory, exact,
             estimators.power_gm_variance(k), 2.0 / k)
        )
    columns = ["k", "mse", "mse_se", "asymptotic_mse", "exact_mse", "gm_variance", "normal_projection_var"]
    return columns, rows


DEFAULT_SURFACE_ALPHAS = [0.001, 0.01] + [round(0.1 * i, 1) for i in range(1, 21)]
DEFAULT_SURFACE_EPS = [round(0.05 * i, 2) for i in range(1, 21)]


def bounds_surface(cfg, alphas=None, epsilons=None, k0=100):
    rows = bounds.bounds_surface(
        DEFAULT_SURFACE_ALPHAS if alphas is None else alphas,
        DEFAULT_SURFACE_EPS if epsilons is None else epsilons,
        k0,
    )
    return ["alpha", "epsilon", "m_right", "m_left", "g_right", "g_left"], rows


_RUNNERS = {
    "fig1-mse": fig1_mse,
    "fig9-ratio": fig9_ratio,
    "fig10-mle": fig10_mle,
    "bounds-surface": bounds_surface,
}


def run_experiment(cfg):
    return _RUNNERS[cfg.name](cfg)


def write_csv(fh, cfg, columns, rows):
    """CSV with ``# key = value`` lines recording the resolved config."""
    for key, value in asdict(cfg).items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        fh.write(f"# {key} = {value}\n")
    fh.write(",".join(columns) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def run_to_file(cfg):
    columns, rows = run_experiment(cfg)
    if cfg.output in (None, "-"):
        write_csv(sys.stdout, cfg, columns, rows)
    else:
        with open(cfg.output, "w") as fh:
            write_csv(fh, cfg, columns, rows)
    return columns, rows
