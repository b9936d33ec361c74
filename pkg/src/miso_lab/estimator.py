"""Sequential MMSE estimation of the fading vector from feedback-driven
observations ``y_t = x_t^T h + z_t``.

The recursion, starting from ``h_hat = 0`` and ``Omega = I`` at every block
boundary, is::

    d       = x^T Omega x^* + 1
    h_hat' = h_hat + Omega x^* (y - x^T h_hat) / d
    Omega'  = Omega - Omega x^* x^T Omega / d

``h_hat`` is the conditional mean of ``h`` given the past outputs and the
message, and ``Omega`` the conditional covariance of the error, whatever
(possibly nonlinear, feedback-dependent) rule produced the inputs.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import ChannelConfig
from .encoders import EncoderInput
from .errors import (InvalidDimensionError, InvalidInputError, InvalidStateError,
                     NumericalFailureError)
from .numerics import StreamBatch

__all__ = [
    "MmseState",
    "GaussPrior",
    "ErrorCovariance",
    "BatchMmse",
    "reset",
    "update",
    "update_general",
    "batch_condition",
    "run_feedback_block",
    "estimate_error_cov_mc",
    "CLIP_TOL",
    "HARD_TOL",
]

CLIP_TOL = 1e-9
HARD_TOL = 1e-6


@dataclass(frozen=True)
class MmseState:
    h_hat: np.ndarray
    omega: np.ndarray
    t_in_block: int = 0

    @property
    def dim(self):
        return self.h_hat.shape[0]


@dataclass(frozen=True)
class GaussPrior:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]


def reset(m):
    """State at the start of a coherence block: ``h_hat = 0``, ``Omega = I``."""
    if int(m) != m or m < 1:
        raise InvalidDimensionError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    return MmseState(np.zeros(m, dtype=complex), np.eye(m, dtype=complex), 0)


def _hermitize(a):
    return 0.5 * (a + a.conj().swapaxes(-1, -2))


def clean_omega(omega):
    """Symmetrise and, if needed, clip the spectrum of ``omega`` to [0, 1].

    Returns the cleaned matrix and the ``(min, max)`` eigenvalues observed
    before clipping. Violations above ``HARD_TOL`` raise, because in exact
    arithmetic the spectrum always lies in [0, 1].
    """
    omega = _hermitize(omega)
    w, v = np.linalg.eigh(omega)
    lo, hi = float(w[0]), float(w[-1])
    violation = max(-lo, hi - 1.0, 0.0)
    if violation > HARD_TOL:
        raise InvalidStateError(
            f"error covariance spectrum [{lo:.3e}, {hi:.3e}] left [0, 1]")
    if violation > CLIP_TOL:
        omega = (v * np.clip(w, 0.0, 1.0)) @ v.conj().T
    return omega, (lo, hi)


def update(state, x, y):
    """Condition on one observation ``y = x^T h + z``.

    Parameters
    ----------
    state : MmseState
    x : array_like, shape (M,)
    y : complex

    Returns
    -------
    MmseState
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != state.h_hat.shape:
        raise InvalidInputError(f"input has shape {x.shape}, state has dim {state.dim}")
    v = state.omega @ x.conj()
    d = float((x @ v).real) + 1.0
    innovation = complex(y) - complex(x @ state.h_hat)
    h_hat = state.h_hat + v * (innovation / d)
    omega, _ = clean_omega(state.omega - np.outer(v, v.conj()) / d)
    return MmseState(h_hat, omega, state.t_in_block + 1)


def _check_prior(prior):
    cov = np.asarray(prior.cov)
    if cov.shape != (prior.dim, prior.dim):
        raise InvalidInputError("prior covariance does not match the mean")
    if np.abs(cov - cov.conj().T).max(initial=0.0) > 1e-12:
        raise InvalidStateError("prior covariance is not Hermitian")
    scale = max(1.0, float(np.abs(cov).max(initial=0.0)))
    if np.linalg.eigvalsh(cov)[0] < -1e-9 * scale:
        raise InvalidStateError("prior covariance is not positive semidefinite")


def update_general(prior, a_mat, y_vec):
    """Condition ``u ~ CN(mean, cov)`` on ``y = A u + z``, ``z ~ CN(0, I_N)``.

    ``A`` has one row ``x_t^T`` per observation, so ``N = 1`` with
    ``A = x^T`` reproduces :func:`update`.
    """
    _check_prior(prior)
    a = np.atleast_2d(np.asarray(a_mat, dtype=complex))
    y = np.atleast_1d(np.asarray(y_vec, dtype=complex))
    if a.shape[1] != prior.dim or a.shape[0] != y.shape[0]:
        raise InvalidInputError(
            f"A is {a.shape}, prior dim {prior.dim}, {y.shape[0]} observations")
    gain_t = prior.cov @ a.conj().T                      # Omega A^H
    s = a @ gain_t + np.eye(a.shape[0])                  # A Omega A^H + I
    k = np.linalg.solve(s.T, gain_t.T).T                 # Omega A^H S^-1
    mean = prior.mean + k @ (y - a @ prior.mean)
    cov = _hermitize(prior.cov - k @ gain_t.conj().T)
    return GaussPrior(mean, cov)


def batch_condition(prior, observations):
    """One-shot conditioning of the joint Gaussian of ``(u, y_1 .. y_T)``.

    Builds the full joint covariance and partitions it; serves as the
    independent reference for the sequential recursion.

    Parameters
    ----------
    prior : GaussPrior
    observations : sequence of (row, y)
        ``y = row^T u + z`` with unit-variance noise.
    """
    _check_prior(prior)
    observations = list(observations)
    if not observations:
        return GaussPrior(np.array(prior.mean, dtype=complex),
                          np.array(prior.cov, dtype=complex))
    rows = np.array([np.asarray(r, dtype=complex) for r, _ in observations])
    ys = np.array([complex(y) for _, y in observations])
    if rows.ndim != 2 or rows.shape[1] != prior.dim:
        raise InvalidInputError("observation rows must have the prior dimension")
    m, n = prior.dim, rows.shape[0]
    joint = np.empty((m + n, m + n), dtype=complex)
    joint[:m, :m] = prior.cov
    joint[:m, m:] = prior.cov @ rows.conj().T
    joint[m:, :m] = rows @ prior.cov
    joint[m:, m:] = rows @ prior.cov @ rows.conj().T + np.eye(n)
    cross, innov_cov = joint[:m, m:], joint[m:, m:]
    try:
        factor = scipy.linalg.cho_factor(innov_cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("innovation covariance is singular") from exc
    resid = ys - rows @ prior.mean
    mean = prior.mean + cross @ scipy.linalg.cho_solve(factor, resid)
    cov = prior.cov - cross @ scipy.linalg.cho_solve(factor, cross.conj().T)
    return GaussPrior(mean, _hermitize(cov))


@dataclass
class BatchMmse:
    """Vectorised recursion over N independent trials.

    Does not clip ``omega``; spectrum checks are left to the caller (see
    :meth:`spectrum`) because an eigendecomposition per step would dominate
    the cost of large Monte Carlo runs.
    """

    h_hat: np.ndarray
    omega: np.ndarray
    t_in_block: int = 0

    @classmethod
    def start(cls, n, m):
        omega = np.broadcast_to(np.eye(m, dtype=complex), (n, m, m)).copy()
        return cls(np.zeros((n, m), dtype=complex), omega, 0)

    def update(self, x, y):
        """Advance every trial by one observation; return the increments
        ``h_hat_{t+1} - h_hat_t``."""
        v = np.matmul(self.omega, x.conj()[:, :, None])[:, :, 0]
        d = np.einsum("ni,ni->n", x, v).real + 1.0
        innovation = y - np.einsum("ni,ni->n", x, self.h_hat)
        increment = v * (innovation / d)[:, None]
        self.h_hat = self.h_hat + increment
        # The rank-one downdate is Hermitian up to rounding (~1e-17 per step,
        # not amplified), so the full symmetrisation pass is skipped here.
        outer = v[:, :, None] * v.conj()[:, None, :]
        outer /= d[:, None, None]
        self.omega -= outer
        self.t_in_block += 1
        return increment

    def spectrum(self):
        """Eigenvalues of every ``omega`` (ascending, shape (N, M))."""
        return np.linalg.eigvalsh(self.omega)


@dataclass
class FeedbackStep:
    """Snapshot handed to ``observe`` at in-block time ``t`` (before the
    t-th transmission).

    ``increment`` is ``h_hat_t - h_hat_{t-1}`` (``None`` at ``t = 1``).
    """

    t: int
    h: np.ndarray
    est: BatchMmse
    increment: np.ndarray = field(default=None)


def run_feedback_block(encoder, cfg, master_seed, stream_ids, observe, steps=None):
    """Simulate one coherence block per stream with an adaptive encoder.

    Draw order per trial stream: ``h`` (M values), then for each use the
    encoder's own draws followed by the noise sample.

    Parameters
    ----------
    encoder : callable
        ``encoder(EncoderInput) -> x`` of shape (N, M).
    cfg : ChannelConfig
    master_seed : int
    stream_ids : array_like of int
        One stream per trial.
    observe : callable
        Called as ``observe(FeedbackStep)`` for ``t = 1 .. steps``.
    steps : int, optional
        Number of in-block time indices to visit (default ``T_c``).
    """
    steps = cfg.coherence_tc if steps is None else int(steps)
    if not 1 <= steps <= cfg.coherence_tc:
        raise InvalidInputError(f"steps must lie in [1, {cfg.coherence_tc}]")
    rng = StreamBatch(master_seed, stream_ids)
    n, m = len(rng), cfg.antennas_m
    h = rng.standard_cn(m)
    est = BatchMmse.start(n, m)
    ys = np.zeros((n, steps), dtype=complex)
    increment = None
    for t in range(1, steps + 1):
        observe(FeedbackStep(t, h, est, increment))
        if t == steps:
            break
        x = np.asarray(encoder(EncoderInput(t, ys[:, :t - 1], est.h_hat, est.omega,
                                            rng, cfg.power_p)), dtype=complex)
        if x.shape != (n, m):
            raise InvalidInputError(f"encoder returned shape {x.shape}, expected {(n, m)}")
        z = rng.standard_cn()
        y = np.einsum("ni,ni->n", h, x) + z
        ys[:, t - 1] = y
        increment = est.update(x, y)


@dataclass(frozen=True)
class ErrorCovariance:
    """Monte Carlo estimate of ``E[(h - h_hat_t)(h - h_hat_t)^H]``.

    ``reported`` is the trial average of the recursion's ``Omega_t``; the two
    agree when the recursion is a correct conditional covariance.
    ``stderr`` is the entrywise standard error of ``empirical``.
    """

    empirical: np.ndarray
    reported: np.ndarray
    stderr: np.ndarray
    trials: int


def estimate_error_cov_mc(encoder, cfg, t, trials, seed):
    """Empirical error covariance of ``h_hat_t`` under ``encoder``.

    ``t`` is the in-block time index: ``t = 1`` means no observation yet.
    """
    if not isinstance(cfg, ChannelConfig):
        raise InvalidInputError("cfg must be a ChannelConfig")
    if trials < 1:
        raise InvalidInputError("trials must be positive")
    if not 1 <= t <= cfg.coherence_tc:
        raise InvalidInputError(f"t must lie in [1, {cfg.coherence_tc}]")
    box = {}

    def observe(step):
        if step.t == t:
            box["err"] = step.h - step.est.h_hat
            box["omega"] = step.est.omega.mean(axis=0)

    run_feedback_block(encoder, cfg, seed, np.arange(trials), observe, steps=t)
    err = box["err"]
    outer = err[:, :, None] * err.conj()[:, None, :]
    emp = outer.mean(axis=0)
    n = err.shape[0]
    if n > 1:
        se = (outer.real.std(axis=0, ddof=1) + 1j * outer.imag.std(axis=0, ddof=1)) / np.sqrt(n)
    else:
        se = np.full_like(emp, np.inf)
    return ErrorCovariance(_hermitize(emp), box["omega"], se, n)
