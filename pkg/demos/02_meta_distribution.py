# %% [markdown]
# # From moments to the full reliability picture
#
# The fraction of links whose success probability exceeds x comes from
# inverting the imaginary moments, or more cheaply from a Beta curve fitted
# to M1 and M2.  Both are printed side by side.

# %%
import numpy as np

from hybridmeta import Method, NetworkConfig, Variant, meta_rate, meta_sir

cfg = NetworkConfig()
xs = [0.1, 0.3, 0.5, 0.7, 0.9]

# %%
for th in (10.0, 1.0, 0.1):
    gp = meta_sir(cfg, (th, th), xs, Method.GIL_PELAEZ).ccdf
    bt = meta_sir(cfg, (th, th), xs, Method.BETA).ccdf
    print(f"theta = {th:g}")
    for x, g, b in zip(xs, gp, bt):
        print(f"   x = {x:.1f}  inversion {g:.4f}  beta {b:.4f}")

# %% [markdown]
# ## A microwave-only network for comparison

# %%
for th in (10.0, 1.0, 0.1):
    c = meta_sir(cfg, (th, th), [0.3], Method.BETA, variant=Variant.UWAVE).ccdf[0]
    h = meta_sir(cfg, (th, th), [0.3], Method.BETA).ccdf[0]
    print(f"theta = {th:>4g}  F(0.3): hybrid {h:.3f}  microwave-only {c:.3f}")

# %% [markdown]
# ## Rate targets
# Each hop gets its own SIR threshold from a 1 Gbps target and its
# bandwidth share.  More antenna elements at the SBS sharpen the mm-wave hop.

# %%
from hybridmeta.model import replace_path

for n_el in (10, 20, 40, 50):
    c = replace_path(cfg, "small.n_antenna_elements", n_el)
    curve = meta_rate(c, (1e9, 1e9, 1e9), [0.1, 0.5, 0.9])
    print(f"N = {n_el:>2}  F = {np.round(curve.ccdf, 5)}")
