# %% [markdown]
# # Checking the analysis against simulation
#
# Each realization drops both tiers in a disc around the device, associates
# it, and records the exact conditional success probability.  Realizations
# come from independent counter-based streams, so any index range can be
# regenerated on its own.

# %%
import numpy as np

from hybridmeta import Method, NetworkConfig, assoc_probs, meta_sir
from hybridmeta import mcsim

cfg = NetworkConfig()
theta = 1.0
n = 5000
samples = mcsim.run(cfg, (theta, theta), n, seed=7)

# %%
counts = samples.association_counts()
print("association frequencies (MBS, SBS LOS, SBS NLOS):", counts / n)
a = assoc_probs(cfg)
print("analytic                                       :", np.round([a.a1, a.a2_los, a.a2_nlos], 5))

# %%
xs = [0.2, 0.4, 0.6, 0.8]
emp = mcsim.empirical_meta(samples, xs).ccdf
ana = meta_sir(cfg, (theta, theta), xs, Method.GIL_PELAEZ).ccdf
for x, e, g in zip(xs, emp, ana):
    se = np.sqrt(g * (1 - g) / n)
    print(f"x = {x:.1f}  simulated {e:.4f}  analytic {g:.4f}  z = {(e - g) / se:+.2f}")

# %%
m1, se1 = mcsim.empirical_moment(samples, 1.0)
print(f"M1 simulated {m1.real:.4f} +- {se1:.4f}")
print(f"correlation between backhaul and access reliabilities: {samples.hop_correlation():.4f}")
