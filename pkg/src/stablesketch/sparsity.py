"""Very sparse stable projections: limiting scale, convergence diagnostics, and beta choice.

Entries drawn from the sparse three-point law (0 w.p. 1-beta, else +/- Pareto(alpha, mu))
give projections ``sum_i z_i g_i`` that approach an alpha-stable law with scale
``mu * C_alpha * (beta * sum |g_i|^alpha)^(1/alpha)`` as D grows, where
``C_alpha = (Gamma(1-alpha) cos(pi alpha / 2))^(1/alpha)``.

Pareto magnitudes with ``mu < 1`` converge faster in theory, but their density
becomes very steep near ``mu``; the default ``mu = 1`` is the safe choice.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._validation import DomainError, as_float_vector, check_alpha, check_int, check_probability

BOUNDED_SECOND_MOMENT = "bounded-second-moment"
PARETO_TAIL = "pareto-tail"


def sparse_scale_constant(alpha):
    """``C_alpha``, the stable scale reached by unit-normalized sparse projections.

    ``Gamma(1-alpha) cos(pi alpha/2)`` is rewritten as
    ``Gamma(1+t) * (pi/2) * sinc(t/2)`` with ``t = 1 - alpha``, which is smooth
    through the removable singularity at alpha = 1 (value pi/2).
    """
    alpha = check_alpha(alpha, include_upper=False)
    t = 1.0 - alpha
    log_base = gammaln(1.0 + t) + np.log(np.pi / 2.0) + np.log(np.sinc(t / 2.0))
    return float(np.exp(log_base / alpha))


def _abs_norms(g, alpha):
    # both diagnostics are scale free, so rescale to max |g| = 1 against underflow
    g = np.abs(as_float_vector(g, "g"))
    if not np.any(g):
        raise DomainError("g must not be the zero vector")
    g = g / g.max()
    return g, float(np.sum(g**alpha))


def check_convergence_condition(g, alpha):
    """``max|g_i| / ||g||_alpha``; values near 0 mean the sufficient condition holds."""
    alpha = check_alpha(alpha)
    g, s_alpha = _abs_norms(g, alpha)
    return float(1.0 / s_alpha ** (1.0 / alpha))


def convergence_rate(g, alpha, beta):
    """Order of the distance to the stable limit for data ``g`` at sparsity ``beta``."""
    alpha = check_alpha(alpha, include_upper=False)
    beta = check_probability(beta, "beta")
    g, s_alpha = _abs_norms(g, alpha)
    sparse_term = float(np.sum(g**2)) / (beta ** (2.0 / alpha - 1.0) * s_alpha ** (2.0 / alpha))
    if alpha >= 1.0:
        return sparse_term
    return max(float(np.sum(g ** (2.0 * alpha))) / s_alpha**2, sparse_term)


@dataclass(frozen=True)
class SparsityPlan:
    beta: float
    rate_exponent: float
    regime: str
    eta: float = None


def recommend_beta(D, alpha, eta=None):
    """Pick the nonzero probability beta for dimension D.

    ``eta=None`` assumes data with bounded second moments (beta = D^-1/2).
    Otherwise the data magnitudes are taken to be eta-Pareto and
    ``beta = D^(-(1 - alpha/eta)/(2 - alpha))``, which needs eta > alpha.
    ``rate_exponent`` is r in the predicted convergence rate O(D^-r).
    """
    D = check_int(D, "D", minimum=2)
    alpha = check_alpha(alpha, include_upper=False)
    if eta is None:
        return SparsityPlan(D**-0.5, min(1.0, 1.0 / alpha - 0.5), BOUNDED_SECOND_MOMENT)
    eta = float(eta)
    if not eta > alpha:
        raise DomainError("alpha-th moment unbounded; projections do not converge (need eta > alpha)")
    beta = float(D) ** (-(1.0 - alpha / eta) / (2.0 - alpha))
    rate = 1.0 / alpha - 1.0 / eta
    if alpha < 1.0:
        rate = min(rate, 2.0 - max(1.0, 2.0 * alpha / eta))
    return SparsityPlan(beta, rate, PARETO_TAIL, eta)
