"""Block-fading MISO channel with noiseless, unit-delay output feedback.

``y_t = h^T x_t + z_t`` with ``h ~ CN(0, I_M)`` held fixed for ``T_c`` uses
and redrawn independently for the next block, ``z_t ~ CN(0, 1)``.
"""

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import BlockExhaustedError, InvalidInputError
from .numerics import sample_cn

__all__ = [
    "Constraint",
    "ChannelConfig",
    "BlockState",
    "new_block",
    "transmit",
    "feedback",
]


class Constraint(str, enum.Enum):
    """Input constraint: time-averaged ``E||x||^2 <= P`` or ``E||x||^4 <= kappa^2 P^2``."""

    SECOND_MOMENT = "second"
    FOURTH_MOMENT = "fourth"


@dataclass(frozen=True)
class ChannelConfig:
    antennas_m: int
    coherence_tc: int
    power_p: float
    constraint: Constraint = Constraint.SECOND_MOMENT
    kappa: float = 1.0

    def __post_init__(self):
        if int(self.antennas_m) != self.antennas_m or self.antennas_m < 2:
            raise InvalidInputError(f"antennas_m must be an integer >= 2, got {self.antennas_m!r}")
        if int(self.coherence_tc) != self.coherence_tc or self.coherence_tc < 1:
            raise InvalidInputError(f"coherence_tc must be an integer >= 1, got {self.coherence_tc!r}")
        if not (0 < self.power_p < math.inf):
            raise InvalidInputError(f"power_p must be finite and positive, got {self.power_p!r}")
        if not (0 < self.kappa < math.inf):
            raise InvalidInputError(f"kappa must be finite and positive, got {self.kappa!r}")
        object.__setattr__(self, "antennas_m", int(self.antennas_m))
        object.__setattr__(self, "coherence_tc", int(self.coherence_tc))
        object.__setattr__(self, "constraint", Constraint(self.constraint))

    @property
    def alpha(self):
        """Coherence-to-antenna ratio on a log scale, ``log T_c / log M``."""
        return math.log(self.coherence_tc) / math.log(self.antennas_m)


@dataclass(frozen=True)
class BlockState:
    """Fading vector of the current block and the position inside it.

    Building one directly with a chosen ``h`` is the supported way to run
    exact-value checks against a known channel.
    """

    h: np.ndarray
    t_in_block: int
    coherence_tc: int

    @property
    def remaining(self):
        return self.coherence_tc - self.t_in_block


def new_block(cfg, rng):
    """Start a coherence block with a fresh ``h ~ CN(0, I_M)``."""
    return BlockState(h=sample_cn(cfg.antennas_m, rng), t_in_block=0,
                      coherence_tc=cfg.coherence_tc)


def transmit(state, x, rng, noise=None):
    """One channel use.

    Parameters
    ----------
    state : BlockState
    x : array_like
        Input vector of length M.
    rng : RngStream
        Supplies the noise sample ``z ~ CN(0, 1)``.
    noise : complex, optional
        Use this value for ``z`` instead of drawing it (test hook; no draw is
        consumed from ``rng``).

    Returns
    -------
    y : complex
    state : BlockState
        The advanced state; ``h`` is unchanged.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != state.h.shape:
        raise InvalidInputError(f"input has shape {x.shape}, channel has {state.h.shape}")
    if state.t_in_block >= state.coherence_tc:
        raise BlockExhaustedError("coherence block already used T_c times")
    z = rng.standard_cn() if noise is None else complex(noise)
    y = complex(state.h @ x) + z
    return y, replace(state, t_in_block=state.t_in_block + 1)


def feedback(y):
    """Deliver a channel output to the transmitter.

    The link is noiseless, so this is the identity; it marks the causality
    boundary: an input at time t may only depend on values returned here
    before t.
    """
    return y
