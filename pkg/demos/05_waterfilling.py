"""
Perfect channel knowledge as a yardstick
========================================

With ``h`` known at both ends, the best power policy water-fills over the
gain ``||h||^2 ~ Gamma(M, 1)``. For many antennas the gain hardens and the
rate approaches ``log2(1 + P M)``; the edge of water-filling over equal
power then shrinks below print precision.
"""

# %%
from miso_lab import equal_power_rate, ideal_asymptote, waterfill

for m in (1, 8, 64, 512):
    wf = waterfill(m, 10.0)
    print(f"M={m:3d}: water level {wf.level:.4f}, rate {wf.rate_bits:.4f}, "
          f"equal power {equal_power_rate(m, 10.0):.4f}, "
          f"ratio to log2(1+PM) {wf.rate_bits / ideal_asymptote(m, 10.0):.5f}")
