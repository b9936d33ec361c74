"""
Capacity bounds at a glance
===========================

With ``M`` transmit antennas and a fading block of ``T_c`` uses, capacity per
use is boxed in by closed forms. This walks a small table of them.
"""

# %%
# The converse under an average-power budget grows like ``2 log2 min(M, T_c)``:
# once there are more antennas than uses per block, adding antennas stops
# helping. The training scheme's guarantee sits below it.
from miso_lab import bound_report

print(f"{'M':>5} {'T_c':>4} {'T_tau':>5} {'lower':>8} {'upper':>8} {'ideal':>8}")
for m in (8, 64, 512):
    for tc in (4, 16, 64):
        r = bound_report(m, tc, 10.0)
        lo = "-" if r.degenerate else f"{r.lower_second_bits:8.3f}"
        print(f"{m:5d} {tc:4d} {r.t_train or '-':>5} {lo:>8} {r.upper_second_bits:8.3f} "
              f"{r.ideal_waterfill_bits:8.3f}")

# %%
# Under a fourth-moment limit ``E||x||^4 <= kappa^2 P^2`` the converse only
# grows like ``log2 min(M, T_c)``, and the scheme runs at power ``P/kappa_o``.
for kappa in (1.0, 3 ** 0.5, 3.0):
    r = bound_report(64, 8, 10.0, kappa)
    print(f"kappa={kappa:.3f}: lower {r.lower_fourth_bits:.3f}  upper {r.upper_fourth_bits:.3f}")

# %%
# At very low power the lower bound's formula goes negative; it is clamped at
# zero and flagged.
r = bound_report(4, 4, 0.01)
print("low power:", r.lower_second_bits, "vacuous:", r.lower_second_vacuous)
