"""Random streams, complex Gaussian sampling and the few special functions
the capacity analysis needs.

Random numbers come from a counter-based generator (Threefry-2x32 with 20
rounds). A stream is identified by ``(master_seed, stream_id)``; the i-th
draw of a stream is a pure function of that pair and ``i``. Monte Carlo code
uses one stream per trial, so a trial's realisation does not depend on how
trials are batched, chunked or scheduled.

Complex Gaussian convention: ``CN(0, 1)`` has unit *total* variance, i.e.
real and imaginary parts each have variance 1/2.
"""

import math

import numpy as np

from .errors import DomainError, InvalidDimensionError, InvalidInputError

__all__ = [
    "EULER_GAMMA",
    "RngStream",
    "StreamBatch",
    "threefry2x32",
    "sample_cn",
    "sample_cn_cov",
    "digamma",
    "chi2_log_mean_bits",
    "chi2_log_lower_bound_bits",
    "gamma_density",
]

EULER_GAMMA = 0.57721566490153286060651209

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF
_ROTATIONS = (13, 15, 26, 6, 17, 29, 16, 24)
_SKEIN_PARITY = np.uint32(0x1BD11BDA)
_TWO_PI = 2.0 * math.pi


def threefry2x32(key0, key1, ctr0, ctr1):
    """Threefry-2x32-20 block function (Random123 / JAX compatible).

    All arguments are broadcast against each other and interpreted as
    ``uint32``. Returns the two output words.
    """
    k0 = np.asarray(key0, dtype=np.uint32)
    k1 = np.asarray(key1, dtype=np.uint32)
    x0 = np.asarray(ctr0, dtype=np.uint32)
    x1 = np.asarray(ctr1, dtype=np.uint32)
    with np.errstate(over="ignore"):
        return _threefry_rounds(k0, k1, x0, x1)


def _threefry_rounds(k0, k1, x0, x1):
    # uint32 wraparound is the intended arithmetic
    ks = (k0, k1, _SKEIN_PARITY ^ k0 ^ k1)
    x0 = x0 + k0
    x1 = x1 + k1
    for r in range(20):
        rot = _ROTATIONS[r % 8]
        x0 = x0 + x1
        x1 = (x1 << np.uint32(rot)) | (x1 >> np.uint32(32 - rot))
        x1 = x1 ^ x0
        if r % 4 == 3:
            i = (r + 1) // 4
            x0 = x0 + ks[i % 3]
            x1 = x1 + ks[(i + 1) % 3] + np.uint32(i)
    return x0, x1


def _split64(values):
    v = np.asarray(values, dtype=np.uint64)
    return (v & np.uint64(_MASK32)).astype(np.uint32), (v >> np.uint64(32)).astype(np.uint32)


def _stream_keys(master_seed, stream_ids):
    seed = int(master_seed) & _MASK64
    s0, s1 = np.uint32(seed & _MASK32), np.uint32(seed >> 32)
    c0, c1 = _split64(stream_ids)
    # For a fixed seed this is a bijection of stream_id, so keys never collide.
    return threefry2x32(s0, s1, c0, c1)


def _threefry_scalar(k0, k1, x0, x1):
    """Plain-int Threefry-2x32-20; much faster than numpy for a few counters."""
    ks = (k0, k1, 0x1BD11BDA ^ k0 ^ k1)
    x0 = (x0 + k0) & _MASK32
    x1 = (x1 + k1) & _MASK32
    for r in range(20):
        rot = _ROTATIONS[r % 8]
        x0 = (x0 + x1) & _MASK32
        x1 = ((x1 << rot) | (x1 >> (32 - rot))) & _MASK32
        x1 ^= x0
        if r % 4 == 3:
            i = (r + 1) // 4
            x0 = (x0 + ks[i % 3]) & _MASK32
            x1 = (x1 + ks[(i + 1) % 3] + i) & _MASK32
    return x0, x1


def _words_scalar(k0, k1, start, count):
    out = [_threefry_scalar(k0, k1, c & _MASK32, c >> 32) for c in range(start, start + count)]
    w = np.array(out, dtype=np.uint32).reshape(count, 2)
    return w[:, 0], w[:, 1]


def _words(keys, start, count):
    """Output words for counters ``start .. start+count-1`` of every key."""
    k0, k1 = keys
    c0, c1 = _split64(np.arange(start, start + count, dtype=np.uint64))
    return threefry2x32(k0[:, None], k1[:, None], c0[None, :], c1[None, :])


def _words_to_cn(w0, w1):
    u1 = (w0.astype(np.float64) + 0.5) * 2.0**-32
    theta = w1.astype(np.float64) * (_TWO_PI * 2.0**-32)
    radius = np.sqrt(-np.log(u1))
    return radius * np.cos(theta) + 1j * (radius * np.sin(theta))


def _words_to_uniform(w0, w1):
    hi = (w0 >> np.uint32(5)).astype(np.float64)
    lo = (w1 >> np.uint32(6)).astype(np.float64)
    return (hi * 67108864.0 + lo) * 2.0**-53


def _shape(size):
    if size is None:
        return ()
    if isinstance(size, (int, np.integer)):
        return (int(size),)
    return tuple(int(s) for s in size)


class StreamBatch:
    """A bundle of independent streams advanced in lock-step.

    Row ``i`` of every draw equals what ``RngStream(master_seed,
    stream_ids[i])`` would return at the same position.

    Parameters
    ----------
    master_seed : int
        64-bit seed shared by all streams.
    stream_ids : array_like of int
        One 64-bit identifier per stream (usually the trial index).
    position : int, optional
        Counter of the next draw.
    """

    def __init__(self, master_seed, stream_ids, position=0):
        ids = np.atleast_1d(np.asarray(stream_ids))
        if ids.ndim != 1:
            raise InvalidInputError("stream_ids must be one-dimensional")
        if ids.size and (ids.min() < 0):
            raise InvalidInputError("stream ids must be non-negative")
        self.master_seed = int(master_seed) & _MASK64
        self.stream_ids = ids.astype(np.uint64)
        self.position = int(position)
        self._keys = _stream_keys(self.master_seed, self.stream_ids)

    def __len__(self):
        return self.stream_ids.size

    def _take(self, count):
        w = _words(self._keys, self.position, count)
        self.position += count
        return w

    def standard_cn(self, size=None):
        """``CN(0, 1)`` draws of shape ``(len(self), *size)``."""
        shape = _shape(size)
        n = int(np.prod(shape, dtype=np.int64))
        out = _words_to_cn(*self._take(n))
        return out.reshape((len(self),) + shape)

    def uniform(self, size=None):
        """Uniform draws on [0, 1) with 53-bit resolution."""
        shape = _shape(size)
        n = int(np.prod(shape, dtype=np.int64))
        out = _words_to_uniform(*self._take(n))
        return out.reshape((len(self),) + shape)

    def subset(self, rows):
        """New batch holding the selected streams at the current position."""
        return StreamBatch(self.master_seed, self.stream_ids[rows], self.position)


class RngStream:
    """A single reproducible random stream.

    Two instances built from the same ``(master_seed, stream_id)`` yield the
    same sequence of draws; different ``stream_id`` values give independent
    sequences.
    """

    def __init__(self, master_seed, stream_id=0, position=0):
        if int(stream_id) < 0:
            raise InvalidInputError("stream_id must be non-negative")
        self.master_seed = int(master_seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.position = int(position)
        seed = self.master_seed
        k0, k1 = _threefry_scalar(seed & _MASK32, seed >> 32,
                                  self.stream_id & _MASK32, self.stream_id >> 32)
        self._key_ints = (k0, k1)
        self._keys = (np.array([k0], dtype=np.uint32), np.array([k1], dtype=np.uint32))

    def __repr__(self):
        return (f"RngStream(master_seed={self.master_seed}, "
                f"stream_id={self.stream_id}, position={self.position})")

    def _take(self, count):
        if count <= 64:
            w0, w1 = _words_scalar(*self._key_ints, self.position, count)
        else:
            w0, w1 = _words(self._keys, self.position, count)
            w0, w1 = w0[0], w1[0]
        self.position += count
        return w0, w1

    def standard_cn(self, size=None):
        shape = _shape(size)
        n = int(np.prod(shape, dtype=np.int64))
        out = _words_to_cn(*self._take(n))
        if shape == ():
            return complex(out[0])
        return out.reshape(shape)

    def uniform(self, size=None):
        shape = _shape(size)
        n = int(np.prod(shape, dtype=np.int64))
        out = _words_to_uniform(*self._take(n))
        if shape == ():
            return float(out[0])
        return out.reshape(shape)


def sample_cn(dim, rng):
    """Draw a vector with i.i.d. ``CN(0, 1)`` entries.

    Parameters
    ----------
    dim : int
        Vector length, at least 1.
    rng : RngStream or StreamBatch
        Source of randomness. A batch returns one row per stream.

    Returns
    -------
    numpy.ndarray
        Complex vector of shape ``(dim,)`` (or ``(len(rng), dim)``).
    """
    if int(dim) != dim or dim < 1:
        raise InvalidDimensionError(f"dim must be a positive integer, got {dim!r}")
    return rng.standard_cn(int(dim))


def psd_sqrt(cov):
    """Hermitian square root of a PSD matrix (tiny negative eigenvalues -> 0)."""
    w, v = np.linalg.eigh(cov)
    if w.min(initial=0.0) < -1e-9 * max(1.0, abs(w).max(initial=0.0)):
        raise InvalidInputError("covariance is not positive semidefinite")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def sample_cn_cov(cov, rng, mean=None):
    """Draw ``u ~ CN(mean, cov)`` (one row per stream for a StreamBatch)."""
    cov = np.asarray(cov, dtype=complex)
    root = psd_sqrt(cov)
    w = sample_cn(cov.shape[0], rng)
    u = w @ root.T
    if mean is not None:
        u = u + np.asarray(mean)
    return u


def _is_integer(x):
    return float(x).is_integer()


def _digamma_asymptotic(x):
    # recurrence up to x >= 10, then the Bernoulli-number expansion
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132)))))
    return acc + math.log(x) - 0.5 / x - series


def digamma(x):
    """Digamma function for positive arguments.

    Integers use ``psi(m) = -gamma + sum_{p<m} 1/p`` and half-integers the
    analogous odd-reciprocal sum, both exact to rounding. Other arguments fall
    back to recurrence plus the asymptotic expansion (about 1e-13 accuracy).
    """
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"digamma needs a finite x > 0, got {x!r}")
    if _is_integer(x):
        m = int(x)
        return -EULER_GAMMA + math.fsum(1.0 / p for p in range(1, m))
    if _is_integer(2 * x):
        n = int(x - 0.5)
        return (-EULER_GAMMA - 2.0 * math.log(2.0)
                + math.fsum(2.0 / (2 * k - 1) for k in range(1, n + 1)))
    return _digamma_asymptotic(x)


def _check_even_dof(k):
    if int(k) != k or k < 2 or int(k) % 2:
        raise DomainError(f"k must be an even integer >= 2, got {k!r}")
    return int(k)


def chi2_log_mean_bits(k):
    """``E[log2 u]`` for ``u ~ chi^2(k)``, ``k`` even."""
    k = _check_even_dof(k)
    return (digamma(k // 2) + math.log(2.0)) / math.log(2.0)


def chi2_log_lower_bound_bits(k):
    """Lower bound ``log2 max(k - 2, 1)`` on ``E[log2 u]``, ``u ~ chi^2(k)``."""
    k = _check_even_dof(k)
    return math.log2(max(k - 2, 1))


def gamma_density(g, shape_m):
    """Density of ``||h||^2`` for ``h ~ CN(0, I_M)``, i.e. Gamma(M, 1).

    The factorial is evaluated in log space so ``M`` can be large.
    """
    if int(shape_m) != shape_m or shape_m < 1:
        raise DomainError(f"shape_m must be a positive integer, got {shape_m!r}")
    m = int(shape_m)
    g = np.asarray(g, dtype=float)
    if np.any(g < 0) or np.any(~np.isfinite(g)):
        raise DomainError("gamma_density needs finite g >= 0")
    with np.errstate(divide="ignore"):
        logf = (m - 1) * np.log(np.where(g > 0, g, 1.0)) - g - math.lgamma(m)
    out = np.exp(logf)
    if m > 1:
        out = np.where(g > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out
