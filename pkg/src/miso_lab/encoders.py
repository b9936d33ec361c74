"""Feedback encoders used to drive the estimator and the lemma checks.

An encoder maps what the transmitter legitimately knows at time ``t`` (its
own randomness, the fed-back outputs ``y_1 .. y_{t-1}``, and quantities
computed from them such as the conditional mean ``h_hat_t``) to an input
vector. Encoders never see the channel ``h``.

Encoders are vectorised over trials: every array carries a leading trial
axis of length N.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import StreamBatch

__all__ = [
    "EncoderInput",
    "ZeroEncoder",
    "PilotEncoder",
    "ConjugateBeamEncoder",
    "RandomFeedbackEncoder",
    "BUILTIN_ENCODERS",
]


@dataclass(frozen=True)
class EncoderInput:
    """Causal information available to the transmitter at in-block time ``t``.

    Attributes
    ----------
    t : int
        1-based time index inside the coherence block.
    y_past : ndarray, shape (N, t-1)
        Outputs fed back so far in this block.
    h_hat, omega : ndarray
        Conditional mean ``(N, M)`` and covariance ``(N, M, M)`` of ``h``
        given the past; both are functions of ``y_past`` and past inputs.
    rng : StreamBatch
        Per-trial randomness (plays the role of the message).
    power : float
    """

    t: int
    y_past: np.ndarray
    h_hat: np.ndarray
    omega: np.ndarray
    rng: StreamBatch
    power: float

    @property
    def n_trials(self):
        return self.h_hat.shape[0]

    @property
    def m(self):
        return self.h_hat.shape[1]


def _unit_pilots(n, m, t):
    x = np.zeros((n, m), dtype=complex)
    x[:, (t - 1) % m] = 1.0
    return x


class ZeroEncoder:
    """Sends nothing: ``x_t = 0``."""

    name = "zero"

    def __call__(self, inp):
        return np.zeros((inp.n_trials, inp.m), dtype=complex)


class PilotEncoder:
    """Excites antenna ``((t-1) mod M) + 1`` with power P."""

    name = "pilot"

    def __call__(self, inp):
        return np.sqrt(inp.power) * _unit_pilots(inp.n_trials, inp.m, inp.t)


class ConjugateBeamEncoder:
    """Beamforms along ``h_hat_t^*``; sends a pilot while ``h_hat_t = 0``."""

    name = "conjugate-beam"

    def __call__(self, inp):
        norm = np.linalg.norm(inp.h_hat, axis=1)
        x = _unit_pilots(inp.n_trials, inp.m, inp.t)
        ok = norm > 0
        x[ok] = inp.h_hat[ok].conj() / norm[ok, None]
        return np.sqrt(inp.power) * x


class RandomFeedbackEncoder:
    """Random direction mixed nonlinearly with the fed-back output.

    ``v = w + y_{t-1} h_hat_t^*`` with ``w ~ CN(0, I_M)`` drawn from the
    trial stream; ``x = sqrt(P) rho v / ||v||`` where
    ``rho^2 = 1 + |y_{t-1}|^2 / (1 + |y_{t-1}|^2)`` so the transmit power also
    depends on the feedback.
    """

    name = "random-feedback"

    def __call__(self, inp):
        w = inp.rng.standard_cn(inp.m)
        if inp.t > 1:
            y_last = inp.y_past[:, -1]
            v = w + y_last[:, None] * inp.h_hat.conj()
            a = np.abs(y_last) ** 2
            rho = np.sqrt(1.0 + a / (1.0 + a))
        else:
            v = w
            rho = np.ones(inp.n_trials)
        norm = np.linalg.norm(v, axis=1)
        norm = np.where(norm > 0, norm, 1.0)
        return np.sqrt(inp.power) * (rho / norm)[:, None] * v


BUILTIN_ENCODERS = {
    "pilot": PilotEncoder(),
    "conjugate-beam": ConjugateBeamEncoder(),
    "random-feedback": RandomFeedbackEncoder(),
}
