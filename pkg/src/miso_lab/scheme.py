"""Training-then-beamforming scheme run in every coherence block.

1. Training: for ``t = 1 .. T_tau`` send ``sqrt(P) e_t``; the receiver sees
   ``y_t = sqrt(P) h_t + z_t`` and forms ``h_hat_tau = sqrt(P)/(P+1) y_tau``.
2. The outputs are fed back, so the transmitter computes the same estimate.
3. Data: for the remaining ``T_c - T_tau`` uses send
   ``x_t = sqrt(P) conj(h_hat_tau)/||h_hat_tau|| s_t`` with ``s_t ~ CN(0, 1)``.

For a fourth-moment budget the same scheme runs at the effective power
``kappa P / sqrt(3)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import BlockState, ChannelConfig, Constraint, new_block, transmit
from .errors import DegenerateConfigError, InvalidInputError, ZeroEstimateError
from .numerics import RngStream, StreamBatch

__all__ = [
    "SchemeConfig",
    "SchemeTrace",
    "BlockBatch",
    "training_length",
    "effective_power",
    "pilot",
    "scalar_mmse",
    "precode",
    "combiner_beta",
    "residual_mse",
    "simulate_block",
    "simulate_blocks",
]


def training_length(m, tc):
    """Number of training uses ``ceil(min(M,T_c) / log2 max(4, min(M,T_c)))``."""
    if int(m) != m or m < 2:
        raise InvalidInputError(f"M must be an integer >= 2, got {m!r}")
    if int(tc) != tc or tc < 1:
        raise InvalidInputError(f"T_c must be a positive integer, got {tc!r}")
    k = min(int(m), int(tc))
    t_train = math.ceil(k / math.log2(max(4, k)))
    if t_train >= tc:
        raise DegenerateConfigError(
            f"training needs {t_train} of the {tc} uses; no data phase left")
    return t_train


def effective_power(cfg):
    """Per-use power the scheme runs at: ``P``, or ``kappa P / sqrt(3)``
    under a fourth-moment budget."""
    if cfg.constraint is Constraint.FOURTH_MOMENT:
        return cfg.kappa * cfg.power_p / math.sqrt(3.0)
    return cfg.power_p


@dataclass(frozen=True)
class SchemeConfig:
    channel: ChannelConfig
    t_train: int
    effective_power: float

    def __post_init__(self):
        tc, m = self.channel.coherence_tc, self.channel.antennas_m
        if not 1 <= self.t_train < tc:
            raise DegenerateConfigError(f"t_train={self.t_train} leaves no data phase (T_c={tc})")
        if self.t_train > m:
            raise InvalidInputError(f"t_train={self.t_train} exceeds M={m}")
        if not self.effective_power > 0:
            raise InvalidInputError("effective_power must be positive")

    @classmethod
    def for_channel(cls, channel):
        """Training length from the rule above and the constraint's power."""
        return cls(channel, training_length(channel.antennas_m, channel.coherence_tc),
                   effective_power(channel))

    @property
    def t_data(self):
        return self.channel.coherence_tc - self.t_train

    @property
    def sigma_sq(self):
        return 1.0 / (self.effective_power + 1.0)


@dataclass(frozen=True)
class SchemeTrace:
    """Record of one simulated block.

    ``input_power`` holds ``||x_t||^2`` for all ``T_c`` uses; ``resamples``
    counts blocks discarded because the estimate was exactly zero; ``h`` is
    the realised channel of the kept block.
    """

    y_train: np.ndarray
    h_hat_tau: np.ndarray
    g: float
    per_symbol_y: np.ndarray
    symbols: np.ndarray
    input_power: np.ndarray
    sigma_sq: float
    resamples: int = 0
    h: np.ndarray = None


def pilot(t, power, m):
    """``sqrt(power) e_t`` in C^m (``t`` is 1-based)."""
    if int(t) != t or not 1 <= t <= m:
        raise InvalidInputError(f"pilot index {t!r} outside [1, {m}]")
    x = np.zeros(int(m), dtype=complex)
    x[int(t) - 1] = math.sqrt(power)
    return x


def scalar_mmse(y_train, power):
    """Per-coordinate MMSE estimate ``sqrt(P)/(P+1) * y`` from pilot outputs."""
    if not power > 0:
        raise InvalidInputError("power must be positive")
    return (math.sqrt(power) / (power + 1.0)) * np.asarray(y_train, dtype=complex)


def precode(h_hat_tau, power, s, m=None):
    """Conjugate beamformer ``sqrt(P) conj(h_hat)/||h_hat|| s``.

    The result has length ``m`` (default ``len(h_hat_tau)``); antennas beyond
    the trained ones stay silent.
    """
    h_hat_tau = np.asarray(h_hat_tau, dtype=complex)
    norm = np.linalg.norm(h_hat_tau)
    if norm == 0:
        raise ZeroEstimateError("cannot beamform along a zero estimate")
    m = h_hat_tau.shape[0] if m is None else int(m)
    if m < h_hat_tau.shape[0]:
        raise InvalidInputError("m is smaller than the estimate length")
    x = np.zeros(m, dtype=complex)
    x[:h_hat_tau.shape[0]] = math.sqrt(power) * h_hat_tau.conj() / norm * complex(s)
    return x


def combiner_beta(g, power):
    """LMMSE combiner ``P g / (P g + P sigma^2 + 1)`` with ``sigma^2 = 1/(P+1)``."""
    sig2 = 1.0 / (power + 1.0)
    g = np.asarray(g, dtype=float)
    out = power * g / (power * g + power * sig2 + 1.0)
    return float(out) if out.ndim == 0 else out


def residual_mse(g, power):
    """Conditional MSE ``P g (P sigma^2 + 1) / (P g + P sigma^2 + 1)`` left by
    the LMMSE combiner."""
    sig2 = 1.0 / (power + 1.0)
    g = np.asarray(g, dtype=float)
    c = power * sig2 + 1.0
    out = power * g * c / (power * g + c)
    return float(out) if out.ndim == 0 else out


def simulate_block(cfg, rng, h=None, noiseless=False):
    """Run training and data transmission over one coherence block.

    Parameters
    ----------
    cfg : SchemeConfig
    rng : RngStream
        Draw order: ``h`` (M values), one noise value per training use,
        then ``(s_t, z_t)`` per data use.
    h : array_like, optional
        Fixed channel (test hook); no ``h`` is drawn.
    noiseless : bool
        Force ``z = 0`` everywhere (test hook).

    Returns
    -------
    SchemeTrace
    """
    ch = cfg.channel
    m, p, tt = ch.antennas_m, cfg.effective_power, cfg.t_train
    resamples = 0
    while True:
        if h is None:
            state = new_block(ch, rng)
        else:
            state = BlockState(np.asarray(h, dtype=complex), 0, ch.coherence_tc)
        noise = 0.0 if noiseless else None
        y_train = np.empty(tt, dtype=complex)
        powers = np.empty(ch.coherence_tc)
        for t in range(1, tt + 1):
            x = pilot(t, p, m)
            y_train[t - 1], state = transmit(state, x, rng, noise=noise)
            powers[t - 1] = float(np.vdot(x, x).real)
        h_hat = scalar_mmse(y_train, p)
        g = float(np.vdot(h_hat, h_hat).real)
        if g > 0:
            break
        if h is not None:
            raise ZeroEstimateError("injected channel and noise give a zero estimate")
        resamples += 1
    symbols = np.empty(cfg.t_data, dtype=complex)
    y_data = np.empty(cfg.t_data, dtype=complex)
    for i in range(cfg.t_data):
        symbols[i] = rng.standard_cn()
        x = precode(h_hat, p, symbols[i], m)
        y_data[i], state = transmit(state, x, rng, noise=noise)
        powers[tt + i] = float(np.vdot(x, x).real)
    return SchemeTrace(y_train, h_hat, g, y_data, symbols, powers, 1.0 / (p + 1.0),
                       resamples, state.h)


@dataclass(frozen=True)
class BlockBatch:
    """Vectorised counterpart of :class:`SchemeTrace` (leading trial axis)."""

    h: np.ndarray
    y_train: np.ndarray
    h_hat_tau: np.ndarray
    g: np.ndarray
    per_symbol_y: np.ndarray
    symbols: np.ndarray
    input_power: np.ndarray
    sigma_sq: float
    resamples: int

    def __len__(self):
        return self.g.shape[0]


def simulate_blocks(cfg, trials, seed, first_trial=0):
    """Simulate ``trials`` independent blocks, trial ``i`` on stream
    ``first_trial + i``.

    Row ``i`` reproduces ``simulate_block(cfg, RngStream(seed, first_trial+i))``
    up to floating-point summation order.
    """
    ch = cfg.channel
    m, p, tt, td = ch.antennas_m, cfg.effective_power, cfg.t_train, cfg.t_data
    ids = np.arange(first_trial, first_trial + int(trials))
    rng = StreamBatch(seed, ids)
    h = rng.standard_cn(m)
    z_train = rng.standard_cn(tt)
    sz = rng.standard_cn((td, 2))
    s, z_data = sz[:, :, 0], sz[:, :, 1]

    y_train = math.sqrt(p) * h[:, :tt] + z_train
    h_hat = scalar_mmse(y_train, p)
    g = np.einsum("ni,ni->n", h_hat.conj(), h_hat).real
    norm = np.sqrt(g)
    safe = np.where(norm > 0, norm, 1.0)
    gain = np.einsum("ni,ni->n", h[:, :tt], h_hat.conj()) / safe
    y_data = math.sqrt(p) * gain[:, None] * s + z_data
    powers = np.empty((len(ids), ch.coherence_tc))
    powers[:, :tt] = p
    powers[:, tt:] = p * np.abs(s) ** 2

    resamples = 0
    bad = np.flatnonzero(g == 0)
    if bad.size:
        for i in bad:
            stream = RngStream(seed, int(ids[i]))
            tr = simulate_block(cfg, stream)
            resamples += tr.resamples
            y_train[i], h_hat[i], g[i] = tr.y_train, tr.h_hat_tau, tr.g
            y_data[i], s[i], powers[i] = tr.per_symbol_y, tr.symbols, tr.input_power
            h[i] = tr.h
    return BlockBatch(h, y_train, h_hat, g, y_data, s, powers, 1.0 / (p + 1.0), resamples)
