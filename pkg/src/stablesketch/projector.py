"""Projection specs, on-demand projection entries, and turnstile sketches.

The projection matrix R (D rows, k columns) is never stored. Entry ``r_ij``
is regenerated from ``(spec.seed, stream=j, counter=i)`` with 1-based ``i``
and ``j``, so sketches of different vectors (or of one vector arriving as a
stream of updates in any order) always share the same R.
"""

import hashlib
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import sampler
from ._validation import (
    DomainError,
    check_alpha,
    check_int,
    check_positive,
    check_probability,
    check_uint64,
)

DENSE = "dense-stable"
SPARSE = "sparse-pareto"
MODES = (DENSE, SPARSE)

# Cells generated per block when R is regenerated in bulk.
_BLOCK_CELLS = 1 << 20


@dataclass(frozen=True)
class ProjectionSpec:
    """Immutable description of a stable (or very sparse stable) projection.

    Two sketches can be compared only when their specs are equal field by field.
    """

    alpha: float
    k: int
    D: int
    seed: int
    mode: str = DENSE
    beta: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "k", check_int(self.k, "k", minimum=1))
        object.__setattr__(self, "D", check_int(self.D, "D", minimum=1))
        object.__setattr__(self, "seed", check_uint64(self.seed, "seed"))
        object.__setattr__(self, "beta", check_probability(self.beta, "beta"))
        object.__setattr__(self, "mu", check_positive(self.mu, "mu"))
        if self.mode == SPARSE and self.alpha >= 2.0:
            raise DomainError("sparse-pareto mode requires alpha < 2")
        if self.k > 0xFFFFFFFF:
            raise DomainError("k must fit in 32 bits")

    @property
    def sparse(self):
        return self.mode == SPARSE

    @property
    def fingerprint(self):
        """64-bit hash over every field."""
        digest = hashlib.blake2b(_pack_spec(self), digest_size=8).digest()
        return int.from_bytes(digest, "little")


def _pack_spec(spec):
    return struct.pack(
        "<BdIQQdd",
        1 if spec.sparse else 0,
        spec.alpha,
        spec.k,
        spec.D,
        spec.seed,
        spec.beta,
        spec.mu,
    )


def _check_rows(spec, rows):
    rows = np.asarray(rows)
    if rows.size and (rows.min() < 1 or rows.max() > spec.D):
        raise DomainError(f"row index out of range 1..{spec.D}")
    return rows.astype(np.uint64)


def _entries(spec, rows, cols):
    if spec.sparse:
        return sampler.sparse_entry_variates(spec.alpha, spec.beta, spec.mu, spec.seed, cols, rows)
    return sampler.stable_variates(spec.alpha, spec.seed, cols, rows)


def entry_at(spec, i, j):
    """The projection entry r_ij (1-based row ``i`` <= D, column ``j`` <= k)."""
    i = check_int(i, "i")
    j = check_int(j, "j")
    if not 1 <= i <= spec.D:
        raise DomainError(f"row index {i} out of range 1..{spec.D}")
    if not 1 <= j <= spec.k:
        raise DomainError(f"column index {j} out of range 1..{spec.k}")
    return float(_entries(spec, np.uint64(i), np.uint64(j)))


def rows_block(spec, rows):
    """Rows of R for the given 1-based row indices, shape (len(rows), k)."""
    rows = _check_rows(spec, np.atleast_1d(rows))
    cols = np.arange(1, spec.k + 1, dtype=np.uint64)
    return _entries(spec, rows[:, None], cols[None, :])


def materialize(spec):
    """The full D x k matrix; only for small problems and cost benchmarks."""
    return rows_block(spec, np.arange(1, spec.D + 1))


def _iter_row_chunks(n_rows, k):
    step = max(1, _BLOCK_CELLS // max(k, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


# Exact accumulators hold integers in units of 2**-1126, enough to represent
# every finite double (subnormals included) without rounding.
_EXACT_SHIFT = 1126
_EXACT_UNIT = 1 << _EXACT_SHIFT

FAST, KAHAN, EXACT = "fast", "kahan", "exact"
ACCUMULATIONS = (FAST, KAHAN, EXACT)


def _to_exact(x):
    """Float array -> object array of Python ints, exact."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("exact accumulation needs finite values")
    frac, exp = np.frexp(x)
    mant = (frac * 2.0**53).astype(np.int64).astype(object)
    shift = (exp.astype(np.int64) - 53 + _EXACT_SHIFT).astype(object)
    return np.left_shift(mant, shift)


def _from_exact(ints):
    """Correctly rounded (Python int true division) back to float64."""
    return np.array([n / _EXACT_UNIT for n in ints], dtype=np.float64)


@dataclass(eq=False)
class Sketch:
    """k accumulators for one vector or stream under a fixed spec.

    Single writer while updating; call :meth:`freeze` before sharing.
    """

    spec_fingerprint: int
    values: np.ndarray
    update_count: int = 0
    frozen: bool = field(default=False, compare=False)
    _exact: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def zeros(cls, spec):
        return cls(spec.fingerprint, np.zeros(spec.k, dtype=np.float64))

    @property
    def k(self):
        return self.values.shape[0]

    def freeze(self):
        self.values.setflags(write=False)
        self.frozen = True
        return self

    def copy(self):
        exact = None if self._exact is None else self._exact.copy()
        return Sketch(self.spec_fingerprint, self.values.copy(), self.update_count, _exact=exact)

    def _check_spec(self, spec):
        if spec.fingerprint != self.spec_fingerprint:
            raise DomainError("sketch fingerprint does not match projection spec")

    def apply_updates(self, spec, indices, deltas, *, accumulation=FAST):
        """Add ``delta * R[index]`` for every event, in place.

        ``accumulation`` selects how the k running sums are kept:

        * ``"fast"``: chunks of events are folded in with one matrix product.
        * ``"kahan"``: compensated summation in event order.
        * ``"exact"``: each rounded term ``fl(delta * r)`` is added to an exact
          integer accumulator and the stored value is its correctly rounded sum.
          The result is independent of event order, and an update followed by
          its negation restores the values bit for bit. The exact state lives
          on this object and survives further exact updates; any other
          accumulation discards it.
        """
        if self.frozen:
            raise DomainError("sketch is frozen")
        if accumulation not in ACCUMULATIONS:
            raise DomainError(f"accumulation must be one of {ACCUMULATIONS}, got {accumulation!r}")
        self._check_spec(spec)
        indices = np.asarray(indices).reshape(-1)
        deltas = np.asarray(deltas, dtype=np.float64).reshape(-1)
        if indices.shape != deltas.shape:
            raise DomainError("indices and deltas must have the same length")
        if indices.size == 0:
            return self
        rows = _check_rows(spec, indices)
        if accumulation == EXACT:
            acc = _to_exact(self.values) if self._exact is None else self._exact
            for sl in _iter_row_chunks(rows.size, spec.k):
                terms = rows_block(spec, rows[sl]) * deltas[sl, None]
                acc = acc + _to_exact(terms).sum(axis=0)
            self._exact = acc
            self.values = _from_exact(acc)
        elif accumulation == KAHAN:
            self._exact = None
            comp = np.zeros_like(self.values)
            for sl in _iter_row_chunks(rows.size, spec.k):
                block = rows_block(spec, rows[sl]) * deltas[sl, None]
                for term in block:
                    y = term - comp
                    t = self.values + y
                    comp = (t - self.values) - y
                    self.values = t
        else:
            self._exact = None
            for sl in _iter_row_chunks(rows.size, spec.k):
                self.values = self.values + deltas[sl] @ rows_block(spec, rows[sl])
        self.update_count += int(indices.size)
        return self


@dataclass(frozen=True)
class UpdateEvent:
    """Turnstile update: add ``delta`` to coordinate ``index`` (1-based)."""

    index: int
    delta: float


def sketch_update(sketch, ev, spec):
    """Return a new sketch with one update applied (exact accumulation)."""
    if not 1 <= ev.index <= spec.D:
        raise DomainError(f"update index {ev.index} out of range 1..{spec.D}")
    out = sketch.copy()
    out.frozen = False
    return out.apply_updates(spec, [ev.index], [ev.delta], accumulation=EXACT)


def project_vector(spec, g):
    """Sketch of a vector: ``values[j] = sum_i g_i r_ij``.

    ``g`` is a dense length-D vector, a ``scipy.sparse`` row/column vector, or an
    ``(indices, values)`` pair with 0-based indices. Only nonzero coordinates
    are visited.
    """
    idx, vals = _nonzeros(spec, g)
    sketch = Sketch.zeros(spec)
    for sl in _iter_row_chunks(idx.size, spec.k):
        sketch.values += vals[sl] @ rows_block(spec, idx[sl] + 1)
    return sketch


def _nonzeros(spec, g):
    if isinstance(g, tuple) and len(g) == 2:
        idx = np.asarray(g[0], dtype=np.int64).reshape(-1)
        vals = np.asarray(g[1], dtype=np.float64).reshape(-1)
        if idx.shape != vals.shape:
            raise DomainError("indices and values must have the same length")
        if idx.size and (idx.min() < 0 or idx.max() >= spec.D):
            raise DomainError(f"dimension mismatch: index outside 0..{spec.D - 1}")
    elif hasattr(g, "tocoo"):
        coo = g.tocoo()
        if spec.D not in coo.shape or coo.shape[0] * coo.shape[1] != spec.D:
            raise DomainError(f"dimension mismatch: expected {spec.D} coordinates, got {coo.shape}")
        idx = (coo.row if coo.shape[0] == spec.D else coo.col).astype(np.int64)
        vals = coo.data.astype(np.float64)
    else:
        g = np.asarray(g, dtype=np.float64).reshape(-1)
        if g.size != spec.D:
            raise DomainError(f"dimension mismatch: expected {spec.D} coordinates, got {g.size}")
        idx = np.flatnonzero(g)
        vals = g[idx]
    keep = vals != 0.0
    return idx[keep], vals[keep]


def sketch_diff(a, b):
    """Componentwise ``a - b``: the sketch of the difference of the two inputs."""
    if a.spec_fingerprint != b.spec_fingerprint:
        raise DomainError("cannot subtract sketches built under different projection specs")
    return Sketch(a.spec_fingerprint, a.values - b.values, a.update_count + b.update_count)


# -- binary format ---------------------------------------------------------

MAGIC = b"ASK1"
VERSION = 1
_HEADER = struct.Struct("<4sHBdIQQddQ")
_CRC = struct.Struct("<I")


class SketchFormatError(ValueError):
    """A sketch file could not be decoded."""


def serialize_sketch(sketch, spec):
    """Encode ``(sketch, spec)`` as little-endian bytes with a trailing CRC32."""
    sketch._check_spec(spec)
    body = _HEADER.pack(
        MAGIC,
        VERSION,
        1 if spec.sparse else 0,
        spec.alpha,
        spec.k,
        spec.D,
        spec.seed,
        spec.beta,
        spec.mu,
        sketch.update_count,
    )
    body += np.asarray(sketch.values, dtype="<f8").tobytes()
    return body + _CRC.pack(zlib.crc32(body))


def deserialize_sketch(data):
    """Inverse of :func:`serialize_sketch`; returns ``(Sketch, ProjectionSpec)``."""
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise SketchFormatError("bad magic")
    if len(data) < 6:
        raise SketchFormatError("truncated sketch")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise SketchFormatError(f"unsupported version {version}")
    if len(data) < _HEADER.size:
        raise SketchFormatError("truncated sketch")
    _, _, mode, alpha, k, D, seed, beta, mu, count = _HEADER.unpack_from(data)
    end = _HEADER.size + 8 * k
    if len(data) < end + _CRC.size:
        raise SketchFormatError("truncated sketch")
    if len(data) > end + _CRC.size:
        raise SketchFormatError("trailing bytes after sketch")
    (crc,) = _CRC.unpack_from(data, end)
    if crc != zlib.crc32(data[:end]):
        raise SketchFormatError("checksum mismatch")
    if mode not in (0, 1):
        raise SketchFormatError(f"unknown mode byte {mode}")
    spec = ProjectionSpec(alpha, k, D, seed, SPARSE if mode else DENSE, beta, mu)
    values = np.frombuffer(data, dtype="<f8", count=k, offset=_HEADER.size).astype(np.float64)
    return Sketch(spec.fingerprint, values, count), spec


def save_sketch(path, sketch, spec):
    with open(path, "wb") as fh:
        fh.write(serialize_sketch(sketch, spec))


def load_sketch(path):
    with open(path, "rb") as fh:
        return deserialize_sketch(fh.read())


def read_update_stream(lines):
    """Parse ``"<index> <delta>"`` lines (1-based index); blank and ``#`` lines skipped."""
    indices, deltas = [], []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"line {lineno}: expected '<index> <delta>', got {line!r}")
        try:
            indices.append(int(parts[0]))
            deltas.append(float(parts[1]))
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from None
    return np.asarray(indices, dtype=np.int64), np.asarray(deltas, dtype=np.float64)
