# %% [markdown]
# # Monitoring an evaluation as data arrive
#
# A fixed-n interval loses its guarantee if we look at it after every batch.
# The asymptotic confidence sequence stays valid uniformly over sample sizes
# at the price of a wider band.

# %%
from cfscore.asympcs import AsympCSParams, choose_rho, prefixes, watch_asympcs
from cfscore.crossfit import crossfit_nuisances
from cfscore.estimators import estimate_dr
from cfscore.nuisance import nuisance_profile
from cfscore.simulation import SimConfig, simulate_paired

# %%
pds, truth = simulate_paired(SimConfig(n=4000, epsilon=0.2, seed=3))
pi_spec, mu_spec = nuisance_profile("linear", seed=0)

# rho only shapes where the band is tightest; tune it for n around 1000
params = AsympCSParams(choose_rho(1000), alpha=0.05)
print(f"rho = {params.rho:.4f}")

# %%
for point in watch_asympcs(prefixes(pds.a, 500), pi_spec, mu_spec, params, K=5, seed=0):
    ds = pds.a.head(point.n)
    fixed = estimate_dr(ds, crossfit_nuisances(ds, pi_spec, mu_spec, K=5, seed=0))
    print(f"n={point.n:5d}  sequence ({point.lo:.3f}, {point.hi:.3f})  "
          f"fixed-n ({fixed.ci[0]:.3f}, {fixed.ci[1]:.3f})  truth {truth.psi_a:.3f}")
