# %% [markdown]
# # Who serves the device, and how reliable is the link?
#
# A two-tier network: sparse macro base stations (MBSs) on microwave, dense
# small cells (SBSs) on mm-wave with a microwave backhaul to their nearest
# MBS.  This walk-through prints the association split and the first few
# moments of the conditional success probability at the default settings.

# %%
import numpy as np

from hybridmeta import NetworkConfig, assoc_probs, closed_form_a1, derive, mean_local_delay, network_jitter
from hybridmeta.model import db_to_lin, replace_path
from hybridmeta.moments import MomentEngine

cfg = NetworkConfig()
d = derive(cfg)
print(f"disc radius used by the simulator: {cfg.radius:.0f} m")
print(f"noise power: {d.noise_sigma2:.3e} W")

# %% [markdown]
# ## Association
# Numerical integration and the closed form for the MBS share should agree.

# %%
a = assoc_probs(cfg)
print(f"A1 (MBS) = {a.a1:.6f}   A2 LOS = {a.a2_los:.6f}   A2 NLOS = {a.a2_nlos:.3e}")
print(f"sum = {a.total:.12f}")
print(f"closed-form A1 = {closed_form_a1(cfg):.6f}")

# %% [markdown]
# More small cells per km^2 pull devices off the macro tier.

# %%
for lam_km in (1, 5, 20, 100):
    c = replace_path(cfg, "small.density_lambda2", lam_km * 1e-6)
    print(f"lambda2 = {lam_km:>3} /km^2 -> A1 = {assoc_probs(c).a1:.4f}")

# %% [markdown]
# ## Moments of the success probability
# M1 is the usual coverage probability; M2 - M1^2 measures how unequal the
# links are.

# %%
for db in (-10, -3, 0, 10):
    th = db_to_lin(db)
    m1, m2 = np.real(MomentEngine(cfg, th, th)(np.array([1.0, 2.0])))
    print(f"theta = {db:>3} dB  M1 = {m1:.4f}  variance = {m2 - m1 * m1:.4f}")

# %% [markdown]
# ## Local delay
# The backhaul hop makes the mean delay blow up once its threshold reaches
# the pole at theta = 1 (for a path-loss exponent of 4).  The jitter needs
# M_{-2}, which diverges earlier, near theta = 0.46.

# %%
for db in (-10, -3, -1):
    th = db_to_lin(db)
    r = mean_local_delay((th, th), cfg)
    jit, _ = network_jitter((th, th), cfg)
    print(f"theta = {db:>3} dB  mean delay = {r.value.real:.4f} slots  jitter = {jit:.4f}")
r = mean_local_delay((1.0, 1.0), cfg)
print(f"theta =   0 dB  diverged = {r.diverged}, backhaul pole at theta = {r.pole}")
