"""
Training, then beamforming
==========================

The scheme spends ``T_tau`` uses sending pilots, estimates ``h``, and
beamforms along the estimate for the rest of the block. Its Monte Carlo rate
should land between the closed-form guarantee and the converse.
"""

# %%
from miso_lab import ChannelConfig, SchemeConfig, estimate_scheme_rate, lower_second, upper_second

for m, tc in ((16, 8), (64, 8), (64, 32)):
    cfg = SchemeConfig.for_channel(ChannelConfig(m, tc, 10.0))
    est = estimate_scheme_rate(cfg, 20_000, seed=1)
    print(f"M={m:3d} T_c={tc:2d} T_tau={cfg.t_train}: "
          f"{lower_second(m, tc, 10.0):.3f} <= {est.mean:.3f} (+/- {est.stderr:.3f}) "
          f"<= {upper_second(m, tc, 10.0):.3f}")
