"""Exponential tail bounds for the geometric-mean estimators and a sample-size planner.

Each bound has the form ``Pr(relative error beyond eps) <= exp(-k eps^2 / M)``.
The constants come from a Markov moment bound evaluated at the moment order a
gamma variable with the estimator's asymptotic mean and variance would make
optimal. They are computed through their reciprocals, which stay finite at
the eps = 1 edge of the left tail (reciprocal +inf, probability bound 0).
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_alpha, check_int, check_positive, check_probability
from .estimators import EULER_GAMMA, log_abs_moment

RIGHT_GM = "right-gm"
LEFT_GM = "left-gm"
RIGHT_POWER = "right-power"
LEFT_POWER = "left-power"
KINDS = (RIGHT_GM, LEFT_GM, RIGHT_POWER, LEFT_POWER)


def c_alpha(alpha):
    """``pi^2/6 (1/2 + 1/alpha^2)``, the asymptotic k-scaled relative variance."""
    alpha = check_alpha(alpha)
    return math.pi**2 / 6.0 * (0.5 + 1.0 / alpha**2)


def _moment_term(alpha, lam, eps):
    if not -1.0 < lam < alpha:
        raise DomainError(f"epsilon={eps:g} too large for alpha={alpha:g}")
    return log_abs_moment(alpha, lam) / (eps * eps)


def _positive(inv, what):
    if not inv > 0.0:
        raise DomainError(f"{what} bound is vacuous here (reciprocal constant {inv:.3g} <= 0)")
    return inv


def _check_left(alpha, eps, k0, k0_floor):
    eps = check_probability(eps, "epsilon")
    k0 = check_int(k0, "k0", minimum=1)
    if not k0 > k0_floor:
        raise DomainError(f"k0 must exceed {k0_floor:g}, got {k0}")
    return eps, k0


def inv_m_right(alpha, epsilon):
    """Reciprocal of the right-tail constant for the d estimator."""
    alpha = check_alpha(alpha)
    eps = check_positive(epsilon, "epsilon")
    c = c_alpha(alpha)
    inv = (
        math.log1p(eps) / (c * eps)
        - _moment_term(alpha, eps / c, eps)
        - EULER_GAMMA * (1.0 - 1.0 / alpha) / (c * eps)
    )
    return _positive(inv, "right-tail")


def inv_m_left(alpha, epsilon, k0):
    """Reciprocal of the left-tail constant for the d estimator (valid for k > k0)."""
    alpha = check_alpha(alpha)
    eps, k0 = _check_left(alpha, epsilon, k0, 1.0 / alpha)
    if eps == 1.0:
        return math.inf
    c = c_alpha(alpha)
    inv = (
        -math.log1p(-eps) / (c * eps)
        - _moment_term(alpha, -eps / c, eps)
        - k0 * log_abs_moment(alpha, 1.0 / k0) / (c * eps)
    )
    return _positive(inv, "left-tail")


def inv_g_right(alpha, epsilon):
    """Reciprocal of the right-tail constant for the d^alpha estimator."""
    alpha = check_alpha(alpha)
    eps = check_positive(epsilon, "epsilon")
    c = c_alpha(alpha)
    inv = (
        math.log1p(eps) / (alpha * alpha * c * eps)
        - _moment_term(alpha, eps / (c * alpha), eps)
        - EULER_GAMMA * (1.0 - 1.0 / alpha) / (c * alpha * eps)
    )
    return _positive(inv, "right-tail")


def inv_g_left(alpha, epsilon, k0):
    """Reciprocal of the left-tail constant for the d^alpha estimator (valid for k > k0)."""
    alpha = check_alpha(alpha)
    eps, k0 = _check_left(alpha, epsilon, k0, 1.0)
    if eps == 1.0:
        return math.inf
    c = c_alpha(alpha)
    inv = (
        -math.log1p(-eps) / (alpha * alpha * c * eps)
        - _moment_term(alpha, -eps / (c * alpha), eps)
        - k0 * log_abs_moment(alpha, alpha / k0) / (alpha * alpha * c * eps)
    )
    return _positive(inv, "left-tail")


def m_right(alpha, epsilon):
    return 1.0 / inv_m_right(alpha, epsilon)


def m_left(alpha, epsilon, k0):
    return 1.0 / inv_m_left(alpha, epsilon, k0)


def g_right(alpha, epsilon):
    return 1.0 / inv_g_right(alpha, epsilon)


def g_left(alpha, epsilon, k0):
    return 1.0 / inv_g_left(alpha, epsilon, k0)


def tail_probability(kind, alpha, epsilon, k, k0=None):
    """``min(1, exp(-k eps^2 / constant))`` for one of :data:`KINDS`.

    Where the constant is not positive the bound says nothing and 1.0 is returned.
    """
    alpha = check_alpha(alpha)
    k = check_int(k, "k", minimum=1)
    eps = float(epsilon)
    if kind == RIGHT_GM:
        if not k * alpha > 1.0:
            raise DomainError("right-gm bound needs k > 1/alpha")
        fn, args = inv_m_right, (alpha, eps)
    elif kind == RIGHT_POWER:
        if k <= 1:
            raise DomainError("right-power bound needs k > 1")
        fn, args = inv_g_right, (alpha, eps)
    elif kind in (LEFT_GM, LEFT_POWER):
        if k0 is None:
            raise DomainError(f"{kind} bound needs k0")
        if not k > k0:
            raise DomainError(f"{kind} bound needs k > k0")
        fn, args = (inv_m_left if kind == LEFT_GM else inv_g_left), (alpha, eps, k0)
    else:
        raise DomainError(f"unknown bound kind {kind!r}; expected one of {KINDS}")
    try:
        inv = fn(*args)
    except DomainError as exc:
        if "vacuous" in str(exc):
            return 1.0
        raise
    return min(1.0, math.exp(-k * eps * eps * inv))


@dataclass(frozen=True)
class BoundReport:
    """Tail-bound constants at (alpha, epsilon, k0); probabilities at k when given."""

    alpha: float
    epsilon: float
    k0: int
    c_alpha: float
    m_right: float
    m_left: float
    g_right: float
    g_left: float
    k: int = None

    def right_prob(self, k=None):
        return self._prob(self.m_right, k)

    def left_prob(self, k=None):
        return self._prob(self.m_left, k)

    def _prob(self, m, k):
        # NaN marks a vacuous or out-of-domain constant: no information, bound 1
        k = self.k if k is None else k
        if math.isnan(m):
            return 1.0
        if m == 0.0:
            return 0.0
        return min(1.0, math.exp(-k * self.epsilon**2 / m))


def bound_report(alpha, epsilon, k0, k=None):
    """All four constants; an out-of-domain constant is reported as NaN."""
    alpha = check_alpha(alpha)

    def safe(fn, *args):
        try:
            return fn(*args)
        except DomainError:
            return math.nan

    return BoundReport(
        alpha,
        float(epsilon),
        int(k0),
        c_alpha(alpha),
        safe(m_right, alpha, epsilon),
        safe(m_left, alpha, epsilon, k0),
        safe(g_right, alpha, epsilon),
        safe(g_left, alpha, epsilon, k0),
        k,
    )


@dataclass(frozen=True)
class SamplePlan:
    k: int
    k0: int
    failure_bound: float
    report: BoundReport


def _union_bound(n_pairs, alpha, eps, k, inv_right):
    try:
        inv_left = inv_m_left(alpha, eps, k - 1)
    except DomainError:
        return math.inf
    left = math.exp(-k * eps * eps * inv_left)
    return n_pairs * (math.exp(-k * eps * eps * inv_right) + left)


def plan_sample_size(n, epsilon, delta, alpha):
    """Smallest k such that every pairwise distance among n points is within 1 +/- eps.

    The union bound over n(n-1)/2 pairs uses the right-tail constant and the
    left-tail constant at ``k0 = k - 1``. Both tail terms shrink as k grows, so
    the smallest feasible k is found by doubling then bisection.
    """
    n = check_int(n, "n", minimum=2)
    eps = check_probability(epsilon, "epsilon")
    delta = check_probability(delta, "delta", allow_one=False)
    alpha = check_alpha(alpha)
    n_pairs = n * (n - 1) / 2.0
    inv_right = inv_m_right(alpha, eps)
    lo = math.floor(1.0 / alpha) + 1  # largest k0 floor; k0 = k - 1 must exceed 1/alpha
    hi = lo + 1

    def ok(k):
        return _union_bound(n_pairs, alpha, eps, k, inv_right) <= delta

    while not ok(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    k = hi
    report = bound_report(alpha, eps, k - 1, k)
    return SamplePlan(k, k - 1, _union_bound(n_pairs, alpha, eps, k, inv_right), report)


def bounds_surface(alphas, epsilons, k0=100):
    """Rows ``(alpha, eps, M_R, M_L, G_R, G_L)`` over a grid; NaN outside the domain."""
    rows = []
    for a in np.atleast_1d(alphas):
        for e in np.atleast_1d(epsilons):
            r = bound_report(float(a), float(e), k0)
            rows.append((r.alpha, r.epsilon, r.m_right, r.m_left, r.g_right, r.g_left))
    return rows
