"""
Learning the channel one output at a time
=========================================

The transmitter sees every channel output through the feedback link, so it
can track the posterior of ``h`` with a rank-one update per use.
"""

# %%
import numpy as np

from miso_lab import GaussPrior, RngStream, batch_condition, reset, sample_cn, update

m = 4
rng = RngStream(master_seed=7, stream_id=0)
h = sample_cn(m, rng)

# %%
# Send a pilot on each antenna, then a few random directions. The trace of
# the error covariance never increases, and its eigenvalues stay in [0, 1].
state, obs = reset(m), []
for t in range(8):
    x = np.sqrt(10.0) * (np.eye(m)[t] if t < m else sample_cn(m, rng) / 2)
    y = complex(h @ x) + rng.standard_cn()
    state = update(state, x, y)
    obs.append((x, y))
    eig = np.linalg.eigvalsh(state.omega)
    print(f"t={t + 1}  tr(Omega)={eig.sum():.4f}  eig in [{eig[0]:.4f}, {eig[-1]:.4f}]  "
          f"error={np.linalg.norm(state.h_hat - h):.4f}")

# %%
# Conditioning on all observations at once gives the same posterior.
ref = batch_condition(GaussPrior(np.zeros(m, complex), np.eye(m, dtype=complex)), obs)
print("max gap to joint conditioning:",
      max(np.abs(state.h_hat - ref.mean).max(), np.abs(state.omega - ref.cov).max()))
