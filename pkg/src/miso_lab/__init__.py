"""Simulation and verification toolkit for block-fading MISO channels with
output feedback: channel model, recursive MMSE estimation, a
training-then-beamforming scheme, closed-form capacity bounds and Monte Carlo
checks of the moment inequalities behind them.
"""

__version__ = "0.1.0"

from .bounds import (BoundReport, GainCurve, WaterFilling, bound_report, equal_power_rate,
                     gain_curve, ideal_asymptote, ideal_bracket, ideal_waterfill,
                     lower_fourth, lower_second, upper_fourth, upper_second, waterfill)
from .channel import BlockState, ChannelConfig, Constraint, feedback, new_block, transmit
from .encoders import (BUILTIN_ENCODERS, ConjugateBeamEncoder, EncoderInput, PilotEncoder,
                       RandomFeedbackEncoder, ZeroEncoder)
from .errors import (BlockExhaustedError, DegenerateConfigError, DomainError,
                     InvalidDimensionError, InvalidInputError, InvalidStateError,
                     MisoLabError, NumericalFailureError, ZeroEstimateError)
from .estimator import (BatchMmse, GaussPrior, MmseState, batch_condition,
                        estimate_error_cov_mc, reset, update, update_general)
from .montecarlo import (DEFAULT_SEED, LemmaCheckResult, McEstimate, estimate_scheme_rate,
                         lemma_suite, quadratic_fourth_moment, quadratic_fourth_moment_proper,
                         sweep_gain,
                         verify_genie_power, verify_hhat_power, verify_increment_moments)
from .numerics import (RngStream, StreamBatch, chi2_log_lower_bound_bits, chi2_log_mean_bits,
                       digamma, gamma_density, sample_cn)
from .scheme import (SchemeConfig, SchemeTrace, combiner_beta, precode, pilot, residual_mse,
                     scalar_mmse, simulate_block, simulate_blocks, training_length)

__all__ = [
    "BoundReport",
    "GainCurve",
    "WaterFilling",
    "bound_report",
    "equal_power_rate",
    "gain_curve",
    "ideal_asymptote",
    "ideal_bracket",
    "ideal_waterfill",
    "lower_fourth",
    "lower_second",
    "upper_fourth",
    "upper_second",
    "waterfill",
    "BlockState",
    "ChannelConfig",
    "Constraint",
    "feedback",
    "new_block",
    "transmit",
    "BUILTIN_ENCODERS",
    "ConjugateBeamEncoder",
    "EncoderInput",
    "PilotEncoder",
    "RandomFeedbackEncoder",
    "ZeroEncoder",
    "BlockExhaustedError",
    "DegenerateConfigError",
    "DomainError",
    "InvalidDimensionError",
    "InvalidInputError",
    "InvalidStateError",
    "MisoLabError",
    "NumericalFailureError",
    "ZeroEstimateError",
    "BatchMmse",
    "GaussPrior",
    "MmseState",
    "batch_condition",
    "estimate_error_cov_mc",
    "reset",
    "update",
    "update_general",
    "DEFAULT_SEED",
    "LemmaCheckResult",
    "McEstimate",
    "estimate_scheme_rate",
    "lemma_suite",
    "quadratic_fourth_moment",
    "quadratic_fourth_moment_proper",
    "sweep_gain",
    "verify_genie_power",
    "verify_hhat_power",
    "verify_increment_moments",
    "RngStream",
    "StreamBatch",
    "chi2_log_lower_bound_bits",
    "chi2_log_mean_bits",
    "digamma",
    "gamma_density",
    "sample_cn",
    "SchemeConfig",
    "SchemeTrace",
    "combiner_beta",
    "precode",
    "pilot",
    "residual_mse",
    "scalar_mmse",
    "simulate_block",
    "simulate_blocks",
    "training_length",
]
