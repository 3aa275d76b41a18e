"""Counter-based, reproducible random variates.

Every variate is a pure function of a ``(seed, stream_id, counter)`` triple:
the triple is hashed with a splitmix64-style finalizer and the hash is mapped
to a uniform on the open interval (0, 1). Nothing is stored, so entries of a
projection matrix can be regenerated in any order, on any thread.

Each sampler consumes a fixed number of uniforms per variate. They are drawn
from "lanes" ``n_lanes * counter + lane`` (modulo 2**64):

* stable: 2 lanes (angle, exponential)
* sparse entry: 3 lanes (occupancy, sign, magnitude)
* pareto, zero-plus, uniform: 1 lane

The scalar functions (``sample_*``) take a :class:`RandomKey`; the
``*_variates`` functions broadcast over arrays of seeds, streams and counters.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import (
    DomainError,
    check_alpha,
    check_positive,
    check_probability,
    check_uint64,
)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_M53 = 2.0**-53


@dataclass(frozen=True)
class RandomKey:
    """Address of one variate."""

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        check_uint64(self.seed, "seed")
        check_uint64(self.stream_id, "stream_id")
        check_uint64(self.counter, "counter")


@dataclass(frozen=True)
class StableParams:
    """Symmetric alpha-stable law with characteristic function exp(-|scale t|^alpha)."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        check_alpha(self.alpha)
        check_positive(self.scale, "scale")


@dataclass(frozen=True)
class SparseEntryDist:
    """Three-point mixture: 0 w.p. 1-beta, else +/- Pareto(alpha, mu) with equal odds."""

    alpha: float
    beta: float
    mu: float = 1.0

    def __post_init__(self):
        check_alpha(self.alpha, include_upper=False)
        check_probability(self.beta, "beta")
        check_positive(self.mu, "mu")


def _u64(x):
    return np.asarray(x, dtype=np.uint64)


def _splitmix(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def hash_triple(seed, stream, counter):
    """64-bit hash of (seed, stream, counter); broadcasts over arrays."""
    with np.errstate(over="ignore"):
        h = _splitmix(_u64(seed))
        h = _splitmix(h ^ _u64(stream))
        return _splitmix(h ^ _u64(counter))


def _lane(counter, n_lanes, lane):
    with np.errstate(over="ignore"):
        return _u64(counter) * np.uint64(n_lanes) + np.uint64(lane)


def uniform_variates(seed, stream, counter):
    """Uniforms on the open interval (0, 1), 53 bits of resolution."""
    bits = hash_triple(seed, stream, counter) >> _S11
    return (bits.astype(np.float64) + 0.5) * _TWO_M53


def _scalar(arr):
    return float(np.asarray(arr).reshape(-1)[0])


# -- transforms ------------------------------------------------------------


def _cms_sign_log(alpha, w, e):
    """Sign and log-magnitude of the Chambers-Mallows-Stuck transform."""
    alpha = np.asarray(alpha, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    with np.errstate(divide="ignore"):
        num = np.sin(alpha * w)
        sign = np.sign(num)
        logmag = (
            np.log(np.abs(num))
            - np.log(np.cos(w)) / alpha
            + (1.0 - alpha) / alpha * (np.log(np.cos((1.0 - alpha) * w)) - np.log(e))
        )
    return sign, logmag


def cms_transform(alpha, w, e):
    """Map an angle ``w`` in (-pi/2, pi/2) and ``e`` > 0 to an S(alpha, 1) variate.

    Computes ``sin(alpha w) / cos(w)**(1/alpha) * (cos((1-alpha) w) / e)**((1-alpha)/alpha)``.
    At ``alpha == 1`` the result is ``tan(w)`` exactly. Accepts scalars or arrays.
    """
    w_arr = np.asarray(w, dtype=np.float64)
    e_arr = np.asarray(e, dtype=np.float64)
    if np.any(~(np.abs(w_arr) < np.pi / 2)):
        raise DomainError("w must lie strictly inside (-pi/2, pi/2)")
    if np.any(~(e_arr > 0.0)):
        raise DomainError("e must be positive")
    if np.ndim(alpha) == 0:
        alpha = check_alpha(alpha)
        if alpha == 1.0:
            out = np.tan(w_arr)
            return float(out) if out.ndim == 0 else out
    sign, logmag = _cms_sign_log(alpha, w_arr, e_arr)
    with np.errstate(over="ignore"):
        out = sign * np.exp(logmag)
    if np.ndim(alpha) != 0:
        out = np.where(np.asarray(alpha) == 1.0, np.tan(w_arr), out)
    return float(out) if np.ndim(out) == 0 else out


def pareto_quantile(alpha, mu, u):
    """Inverse CDF of Pareto(alpha, mu): ``mu * u**(-1/alpha)``."""
    return mu * np.asarray(u, dtype=np.float64) ** (-1.0 / alpha)


# -- vectorized samplers ---------------------------------------------------


def _stable_uniforms(seed, stream, counter):
    u_w = uniform_variates(seed, stream, _lane(counter, 2, 0))
    u_e = uniform_variates(seed, stream, _lane(counter, 2, 1))
    return np.pi * (u_w - 0.5), -np.log(u_e)


def stable_variates(alpha, seed, stream, counter, scale=1.0):
    """S(alpha, scale) variates; scale is applied in log space to avoid overflow."""
    alpha = check_alpha(alpha)
    check_positive(scale, "scale")
    w, e = _stable_uniforms(seed, stream, counter)
    if alpha == 1.0:
        return scale * np.tan(w)
    sign, logmag = _cms_sign_log(alpha, w, e)
    with np.errstate(over="ignore"):
        return sign * np.exp(logmag + np.log(scale))


def stable_log_abs_variates(alpha, seed, stream, counter):
    """``log|x|`` for x ~ S(alpha, 1), without ever forming x.

    Useful for tiny alpha, where |x| routinely overflows a double.
    """
    alpha = check_alpha(alpha)
    w, e = _stable_uniforms(seed, stream, counter)
    if alpha == 1.0:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.tan(w)))
    return _cms_sign_log(alpha, w, e)[1]


def pareto_variates(alpha, mu, seed, stream, counter):
    check_positive(alpha, "alpha")
    check_positive(mu, "mu")
    return pareto_quantile(alpha, mu, uniform_variates(seed, stream, counter))


def sparse_entry_variates(alpha, beta, mu, seed, stream, counter):
    """Sparse three-point entries; occupancy, sign and magnitude use disjoint lanes.

    Sign and magnitude are only generated for occupied cells.
    """
    seed, stream, counter = np.broadcast_arrays(_u64(seed), _u64(stream), _u64(counter))
    occupied = uniform_variates(seed, stream, _lane(counter, 3, 0)) < beta
    out = np.zeros(occupied.shape, dtype=np.float64)
    if occupied.any():
        seed, stream, counter = seed[occupied], stream[occupied], counter[occupied]
        u_sign = uniform_variates(seed, stream, _lane(counter, 3, 1))
        u_mag = uniform_variates(seed, stream, _lane(counter, 3, 2))
        out[occupied] = np.where(u_sign < 0.5, 1.0, -1.0) * pareto_quantile(alpha, mu, u_mag)
    return out


def zero_plus_variates(h, seed, stream, counter):
    """``h / E`` with E a unit exponential, the alpha -> 0+ limit of |x|^alpha."""
    check_positive(h, "h")
    return h / -np.log(uniform_variates(seed, stream, counter))


# -- scalar samplers -------------------------------------------------------


def sample_stable(params, key):
    """One S(alpha, scale) draw addressed by ``key``."""
    return _scalar(stable_variates(params.alpha, key.seed, key.stream_id, key.counter, params.scale))


def sample_pareto(alpha, mu, key):
    return _scalar(pareto_variates(alpha, mu, key.seed, key.stream_id, key.counter))


def sample_sparse_entry(dist, key):
    return _scalar(
        sparse_entry_variates(dist.alpha, dist.beta, dist.mu, key.seed, key.stream_id, key.counter)
    )


def sample_zero_plus(h, key):
    return _scalar(zero_plus_variates(h, key.seed, key.stream_id, key.counter))
