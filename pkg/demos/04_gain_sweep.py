"""
Does beamforming gain survive more antennas?
============================================

Let the block length grow as ``T_c = M^alpha``. With ``alpha = 1`` the rate
keeps climbing relative to ``log2 M``. With a fixed two-use block
(``alpha = 0``) the ratio shrinks: more antennas cannot be learned in time.
"""

# %%
from miso_lab import sweep_gain

for alpha in (1.0, 0.5, 0.0):
    rows = sweep_gain(alpha, 1.0, [16, 64, 256], trials=5000, seed=3)
    trend = "  ".join(f"M={r.m}: {r.rate_over_log2m:.3f}" for r in rows)
    print(f"alpha={alpha}: {trend}")

# %%
# The limiting prelog as a function of alpha, from the bounds alone.
from miso_lab import gain_curve

c = gain_curve([0.0, 0.25, 0.5, 1.0, 2.0])
for a, lo, hi in zip(c.alpha_grid, c.lower, c.upper):
    print(f"alpha={a:.2f}: gain in [{lo:.2f}, {hi:.2f}]")
