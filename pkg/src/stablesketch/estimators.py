"""Scale estimators for sketch differences ``x_j ~ S(alpha, d)``.

Every Gamma-function bracket of the form ``(2/pi) Gamma(1 - l/alpha) Gamma(l) sin(pi l / 2)``
is the fractional moment ``E|x|^l`` of a unit-scale stable variate. It is
evaluated as ``Gamma(1 - l/alpha) Gamma(1 + l) sinc(l/2)``, which is positive
and smooth for every ``-1 < l < alpha`` (including l = 0 and negative l), so
all corrections and variances are computed in log space without sign tracking.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtri

from ._validation import DomainError, as_float_vector, check_alpha, check_int, check_positive
from .sparsity import sparse_scale_constant

EULER_GAMMA = float(np.euler_gamma)
LOG2 = math.log(2.0)

GM = "gm"
GM_POWER = "gm-power"
MEDIAN = "median"
MLE_ZERO_PLUS = "mle-zero-plus"


@dataclass(frozen=True)
class Estimate:
    """A nonnegative norm/distance estimate.

    ``theoretical_sd`` is None when the variance is infinite or unknown.
    For ``gm-power`` and ``mle-zero-plus`` the value estimates ``d**alpha``.
    """

    value: float
    method: str
    alpha: float
    k: int
    theoretical_sd: float = None
    sparse_normalized: bool = False


def log_abs_moment(alpha, lam):
    """``log E|x|^lam`` for x ~ S(alpha, 1), valid for -1 < lam < alpha."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam <= -1.0) or np.any(lam >= alpha):
        raise DomainError(f"moment order must lie in (-1, alpha={alpha:g})")
    out = gammaln(1.0 - lam / alpha) + gammaln(1.0 + lam) + np.log(np.sinc(lam / 2.0))
    return float(out) if out.ndim == 0 else out


def stable_abs_moment(alpha, d, lam):
    """``E|x|^lam = d^lam (2/pi) Gamma(1 - lam/alpha) Gamma(lam) sin(pi lam / 2)``."""
    alpha = check_alpha(alpha)
    d = check_positive(d, "d")
    lam = float(lam)
    if not -1.0 < lam < alpha:
        raise DomainError(f"moment order must lie in (-1, alpha={alpha:g}), got {lam}")
    return float(np.exp(lam * np.log(d) + log_abs_moment(alpha, lam)))


# -- geometric mean for d ----------------------------------------------------


def gm_correction_log(k, alpha):
    """``k log[(2/pi) Gamma(1/k) Gamma(1 - 1/(k alpha)) sin(pi/(2k))]``.

    Decreases in k toward ``-gamma_e (1 - 1/alpha)``.
    """
    alpha = check_alpha(alpha)
    k = check_int(k, "k", minimum=1)
    if not k * alpha > 1.0:
        raise DomainError("correction undefined; need k > 1/alpha")
    return k * log_abs_moment(alpha, 1.0 / k)


def gm_correction_limit(alpha):
    return -EULER_GAMMA * (1.0 - 1.0 / alpha)


def gm_variance(k, alpha, d=1.0, *, asymptotic=False):
    """Variance of :func:`estimate_gm` for k samples (finite only when k > 2/alpha)."""
    alpha = check_alpha(alpha)
    k = check_int(k, "k", minimum=1)
    if not k * alpha > 2.0:
        raise DomainError("variance infinite or undefined; need k > 2/alpha")
    if asymptotic:
        return d * d * math.pi**2 / (6.0 * k) * (0.5 + 1.0 / alpha**2)
    log_ratio = k * log_abs_moment(alpha, 2.0 / k) - 2.0 * k * log_abs_moment(alpha, 1.0 / k)
    return d * d * math.expm1(log_ratio)


def _mean_log_abs(x):
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(x))
    return float(np.mean(logs))


def _sparse_factor(alpha, beta, mu):
    """Scale multiplier between a sparse-mode sketch and a dense one."""
    return mu * sparse_scale_constant(alpha) * beta ** (1.0 / alpha)


def estimate_gm(x, alpha, *, beta=None, mu=1.0):
    """Unbiased geometric-mean estimate of the l_alpha distance ``d``.

    ``prod |x_j|^(1/k)`` divided by its expectation at d = 1. An exact zero in
    ``x`` gives 0. Pass ``beta`` (and ``mu``) for sketches made with sparse
    Pareto projections; the estimate is then divided by ``mu C_alpha beta^(1/alpha)``.
    """
    alpha = check_alpha(alpha)
    x = as_float_vector(x)
    k = x.size
    log_corr = gm_correction_log(k, alpha)
    value = 0.0 if np.any(x == 0.0) else math.exp(_mean_log_abs(x) - log_corr)
    sparse = beta is not None
    if sparse:
        value /= _sparse_factor(alpha, beta, mu)
    sd = math.sqrt(gm_variance(k, alpha, value)) if k * alpha > 2.0 else None
    return Estimate(value, GM, alpha, k, sd, sparse)


# -- geometric mean for d^alpha ------------------------------------------------


def power_gm_correction_log(k, alpha=None):
    """``k log[(2/pi) Gamma(alpha/k) Gamma(1 - 1/k) sin(pi alpha/(2k))]``.

    ``alpha=None`` gives the alpha -> 0+ limit ``k log Gamma(1 - 1/k)``.
    """
    k = check_int(k, "k", minimum=1)
    if k <= 1:
        raise DomainError("need k > 1")
    if alpha is None:
        return k * float(gammaln(1.0 - 1.0 / k))
    alpha = check_alpha(alpha)
    return k * log_abs_moment(alpha, alpha / k)


def power_gm_variance(k, alpha=None, d_pow=1.0, *, asymptotic=False):
    """Variance of :func:`estimate_power_gm` (finite for k > 2).

    ``d_pow`` is ``d**alpha`` (``h`` in the zero-plus limit, ``alpha=None``).
    """
    k = check_int(k, "k", minimum=1)
    if k <= 2:
        raise DomainError("variance infinite or undefined; need k > 2")
    if asymptotic:
        a2 = 0.0 if alpha is None else alpha * alpha
        return d_pow * d_pow * math.pi**2 / (6.0 * k) * (0.5 * a2 + 1.0)
    if alpha is None:
        log_ratio = k * gammaln(1.0 - 2.0 / k) - 2.0 * k * gammaln(1.0 - 1.0 / k)
    else:
        alpha = check_alpha(alpha)
        log_ratio = k * log_abs_moment(alpha, 2.0 * alpha / k) - 2.0 * k * log_abs_moment(
            alpha, alpha / k
        )
    return d_pow * d_pow * math.expm1(float(log_ratio))


def estimate_power_gm(x, alpha=None, *, zero_plus=False, beta=None, mu=1.0):
    """Unbiased geometric-mean estimate of ``d**alpha``.

    With ``zero_plus=True`` the input is ``z_j = |x_j|^alpha`` in the alpha -> 0+
    limit, and the estimate of the Hamming-type norm h is
    ``prod z_j^(1/k) / Gamma(1 - 1/k)^k``.
    """
    x = as_float_vector(x)
    k = x.size
    if zero_plus:
        if np.any(x < 0.0):
            raise DomainError("zero-plus samples must be nonnegative")
        power, corr_alpha, report_alpha = 1.0, None, 0.0
    else:
        report_alpha = corr_alpha = check_alpha(alpha)
        power = corr_alpha
    log_corr = power_gm_correction_log(k, corr_alpha)
    value = 0.0 if np.any(x == 0.0) else math.exp(power * _mean_log_abs(x) - log_corr)
    sparse = beta is not None and not zero_plus
    if sparse:
        value /= _sparse_factor(corr_alpha, beta, mu) ** corr_alpha
    sd = math.sqrt(power_gm_variance(k, corr_alpha, value)) if k > 2 else None
    return Estimate(value, GM_POWER, report_alpha, k, sd, sparse)


# -- sample median ------------------------------------------------------------


def median_constant(alpha, calibration=None):
    """Median of |S(alpha, 1)|.

    Closed forms exist for alpha = 1 (tan(pi/4) = 1) and alpha = 2
    (sqrt(2) times the normal upper quartile); other alpha values need a
    calibration table (``{alpha: q}`` or a mapping of calibration entries).
    """
    alpha = check_alpha(alpha)
    if alpha == 1.0:
        return 1.0
    if alpha == 2.0:
        return math.sqrt(2.0) * float(ndtri(0.75))
    if calibration is not None:
        for a, entry in calibration.items():
            if math.isclose(float(a), alpha, rel_tol=0.0, abs_tol=1e-12):
                return float(getattr(entry, "q_alpha", entry))
    raise DomainError(
        f"no median calibration for alpha={alpha:g}; "
        f"run `stablesketch calibrate-median --alpha {alpha:g} --seed <seed>` first"
    )


def _median_sd(alpha, k, value):
    if alpha == 1.0:
        # |Cauchy| density at its median is 1/pi.
        return value * math.pi / (2.0 * math.sqrt(k))
    if alpha == 2.0:
        q = math.sqrt(2.0) * float(ndtri(0.75))
        dens = 2.0 * math.exp(-q * q / 4.0) / math.sqrt(4.0 * math.pi)
        return value / (2.0 * dens * q * math.sqrt(k))
    return None


def estimate_median(x, alpha=None, *, zero_plus=False, calibration=None, beta=None, mu=1.0):
    """Sample-median estimate of ``d`` (or of h from zero-plus samples z_j).

    k must be odd. Zero-plus mode returns ``median(z) * log 2``.
    """
    x = as_float_vector(x)
    k = x.size
    if k % 2 == 0:
        raise DomainError("median estimator needs an odd number of samples k = 2m + 1")
    if zero_plus:
        if np.any(x < 0.0):
            raise DomainError("zero-plus samples must be nonnegative")
        value = float(np.median(x)) * LOG2
        return Estimate(value, MEDIAN, 0.0, k, value / (LOG2 * math.sqrt(k)))
    alpha = check_alpha(alpha)
    value = float(np.median(np.abs(x))) / median_constant(alpha, calibration)
    sparse = beta is not None
    if sparse:
        value /= _sparse_factor(alpha, beta, mu)
    return Estimate(value, MEDIAN, alpha, k, _median_sd(alpha, k, value), sparse)


def median_moment_numeric(s, m, h=1.0):
    """``E(h_me^s)`` for the zero-plus median estimator with k = 2m + 1 samples.

    Adaptive quadrature of ``h^s int_0^1 log^s(2) (-log t)^-s (t - t^2)^m (2m+1)!/(m!)^2 dt``
    after substituting t = exp(-y). The integrand is assembled in log space and
    the peak at t = 1/2 is bracketed explicitly so that large m stays accurate.
    """
    s = check_int(s, "s", minimum=1)
    if s not in (1, 2):
        raise DomainError("moment order s must be 1 or 2")
    m = check_int(m, "m", minimum=0)
    if m < s:
        raise DomainError("infinite moment; need m >= s (k >= 2s + 1)")
    log_norm = gammaln(2 * m + 2) - 2.0 * gammaln(m + 1)
    log_c = s * math.log(LOG2) + log_norm

    def integrand(y):
        # t = exp(-y); dt = t dy keeps the t -> 1 end free of cancellation
        return math.exp(log_c - s * math.log(y) - (m + 1) * y + m * math.log(-math.expm1(-y)))

    width = 1.0 / math.sqrt(8.0 * m + 8.0)
    t_points = (0.5 + 12 * width, 0.5 + 3 * width, 0.5, 0.5 - 3 * width, 0.5 - 12 * width)
    inner = sorted({-math.log(t) for t in t_points if 0.0 < t < 1.0})
    edges = [0.0] + inner + [math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, lo, hi, limit=200, epsabs=0.0, epsrel=1e-12)
        total += val
    return h**s * total


def median_mse_zero_plus(k, h=1.0):
    """Exact MSE of the zero-plus median estimator (k odd, k >= 5)."""
    k = check_int(k, "k", minimum=1)
    if k % 2 == 0:
        raise DomainError("k must be odd")
    m = (k - 1) // 2
    return median_moment_numeric(2, m, h) - 2.0 * h * median_moment_numeric(1, m, h) + h * h


# -- zero-plus maximum likelihood -----------------------------------------------


def estimate_mle_zero_plus(z, corrected=True):
    """Harmonic-mean (maximum likelihood) estimate of h from z_j ~ h / E_1.

    ``corrected`` multiplies by (1 - 1/k), removing the leading 1/k bias.
    """
    z = as_float_vector(z, "z")
    k = z.size
    if k < 2:
        raise DomainError("need k >= 2")
    if np.any(z <= 0.0):
        raise DomainError("zero-plus samples must be positive")
    value = k / float(np.sum(1.0 / z))
    if corrected:
        value *= 1.0 - 1.0 / k
    _, var = mle_moment_asymptotics(k, value, corrected)
    return Estimate(value, MLE_ZERO_PLUS, 0.0, k, math.sqrt(var))


def mle_exact_moments(k, h=1.0, corrected=True):
    """Exact mean and variance of the zero-plus MLE.

    ``sum 1/z_j`` is Gamma(k, 1/h), so the estimator is ``c h / G`` with
    G ~ Gamma(k, 1) and ``c = k - 1`` (corrected) or ``k``. Needs k > 2.
    """
    k = check_int(k, "k", minimum=3)
    c = k - 1.0 if corrected else float(k)
    mean = c * h / (k - 1.0)
    return mean, c * c * h * h / ((k - 1.0) ** 2 * (k - 2.0))


def mle_moment_asymptotics(k, h=1.0, corrected=True):
    """Mean and variance of the zero-plus MLE to the orders 1/k^2 and 1/k^3."""
    k = check_int(k, "k", minimum=2)
    if corrected:
        return h, h * h * (1.0 / k + 2.0 / k**2)
    return h * (1.0 + 1.0 / k), h * h * (1.0 / k + 4.0 / k**2)


METHODS = (GM, GM_POWER, MEDIAN, MLE_ZERO_PLUS)


def estimate(x, alpha, method=GM, *, beta=None, mu=1.0, calibration=None):
    """Dispatch a sketch difference ``x`` to one of :data:`METHODS`.

    ``mle-zero-plus`` treats ``|x|^alpha`` as zero-plus samples, which is only
    sensible for very small alpha.
    """
    if method == GM:
        return estimate_gm(x, alpha, beta=beta, mu=mu)
    if method == GM_POWER:
        return estimate_power_gm(x, alpha, beta=beta, mu=mu)
    if method == MEDIAN:
        return estimate_median(x, alpha, calibration=calibration, beta=beta, mu=mu)
    if method == MLE_ZERO_PLUS:
        alpha = check_alpha(alpha)
        z = np.abs(as_float_vector(x)) ** alpha
        est = estimate_mle_zero_plus(z, corrected=True)
        if beta is None:
            return est
        factor = _sparse_factor(alpha, beta, mu) ** alpha
        sd = None if est.theoretical_sd is None else est.theoretical_sd / factor
        return Estimate(est.value / factor, est.method, alpha, est.k, sd, True)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
