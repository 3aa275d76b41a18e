"""Monte Carlo calibration of the median of |S(alpha, 1)|.

No closed form exists outside alpha in {1, 2}, so the constant is estimated
from seeded draws and cached in a plain text file with one line per alpha::

    alpha q_alpha stderr n_draws seed
"""

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import sampler
from ._validation import DomainError, check_alpha, check_int, check_uint64

DEFAULT_DRAWS = 10**7
_CHUNK = 1 << 21


@dataclass(frozen=True)
class CalibrationEntry:
    alpha: float
    q_alpha: float
    stderr: float
    n_draws: int
    seed: int


def default_cache_path():
    root = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(root) / "stablesketch" / "median_calibration.txt"


def calibrate_median(alpha, n_draws=DEFAULT_DRAWS, seed=0):
    """Estimate the median of |S(alpha, 1)| from ``n_draws`` seeded draws.

    The standard error is distribution free: half the spread between the order
    statistics one binomial standard deviation (sqrt(n)/2 ranks) either side
    of the middle.
    """
    alpha = check_alpha(alpha)
    n_draws = check_int(n_draws, "n_draws", minimum=101)
    seed = check_uint64(seed, "seed")
    stream = int(np.float64(alpha).view(np.uint64))
    logs = np.empty(n_draws)
    for start in range(0, n_draws, _CHUNK):
        stop = min(start + _CHUNK, n_draws)
        counters = np.arange(start, stop, dtype=np.uint64)
        logs[start:stop] = sampler.stable_log_abs_variates(alpha, seed, stream, counters)
    mid = n_draws // 2
    half_width = max(1, int(round(math.sqrt(n_draws) / 2.0)))
    picks = np.partition(logs, [mid - half_width, mid, mid + half_width])
    q = math.exp(float(np.median(logs)))
    lo = math.exp(float(picks[mid - half_width]))
    hi = math.exp(float(picks[mid + half_width]))
    return CalibrationEntry(alpha, q, (hi - lo) / 2.0, n_draws, seed)


def read_calibration(path):
    """Load a cache file into ``{alpha: CalibrationEntry}``; a missing file is empty."""
    path = Path(path)
    table = {}
    if not path.exists():
        return table
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise DomainError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
        a, q, se, n, seed = parts
        entry = CalibrationEntry(float(a), float(q), float(se), int(n), int(seed))
        table[entry.alpha] = entry
    return table


def write_calibration(path, entries):
    """Merge ``entries`` into the cache at ``path`` (existing alphas are replaced)."""
    path = Path(path)
    table = read_calibration(path)
    for entry in entries:
        table[entry.alpha] = entry
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# alpha q_alpha stderr n_draws seed"]
    for a in sorted(table):
        e = table[a]
        lines.append(f"{e.alpha!r} {e.q_alpha!r} {e.stderr!r} {e.n_draws} {e.seed}")
    path.write_text("\n".join(lines) + "\n")
    return table
