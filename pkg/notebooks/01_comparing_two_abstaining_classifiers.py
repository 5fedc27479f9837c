# %% [markdown]
# # Comparing two abstaining classifiers
#
# Two classifiers that sometimes withhold their predictions are evaluated on
# the same inputs. Selective accuracy (accuracy on the revealed predictions)
# rewards abstaining on hard inputs, so we instead estimate the accuracy each
# classifier would have had without abstaining, and test whether they differ.

# %%
import numpy as np

from cfscore.core import summarize
from cfscore.crossfit import crossfit_nuisances
from cfscore.estimators import estimate_difference, estimate_condessa, estimate_dr, two_sided_test
from cfscore.nuisance import ClipBounds, nuisance_profile
from cfscore.simulation import SimConfig, simulate_paired

# %% [markdown]
# Classifier A has the optimal linear boundary; B has a curved one. Each
# abstains mostly near its own boundary.

# %%
cfg = SimConfig(n=2000, epsilon=0.2, seed=7)
pds, truth = simulate_paired(cfg)
for name in "ab":
    s = summarize(pds.arm(name))
    print(f"{name}: coverage {s.coverage:.3f}, selective accuracy {s.selective_score:.3f}")
print(f"true counterfactual accuracies: A {truth.psi_a:.3f}, B {truth.psi_b:.3f}, "
      f"difference {truth.delta:.3f}")

# %% [markdown]
# Fit the abstention propensity and the score regression out of fold for each
# arm. Both arms share one fold split so their influence values pair up row
# by row.

# %%
pi_spec, mu_spec = nuisance_profile("super_learner", seed=1)
clip = ClipBounds(0.01, 1 - cfg.epsilon)
nuis_a = crossfit_nuisances(pds.a, pi_spec, mu_spec, K=2, clip=clip, seed=1)
nuis_b = crossfit_nuisances(pds.b, pi_spec, mu_spec, K=2, clip=clip, seed=1, folds=nuis_a.folds)

for method in ("plugin", "ipw", "dr"):
    cr = estimate_difference(pds, nuis_a, nuis_b, method=method)
    lo, hi = cr.ci
    print(f"{method:>6}: delta {cr.delta_hat:+.4f}  95% CI ({lo:+.4f}, {hi:+.4f})  width {hi - lo:.4f}")

# %%
cr = estimate_difference(pds, nuis_a, nuis_b, method="dr")
print(two_sided_test(cr))

# %% [markdown]
# The classification quality score rewards correct revealed predictions and
# incorrect hidden ones. It follows from the counterfactual estimate by
# subtraction.

# %%
psi_a = estimate_dr(pds.a, nuis_a)
q = estimate_condessa(pds.a, psi_a, expert=np.ones(int(pds.a.r.sum())))
print(f"theta_A {q.theta_hat:.3f}; with an oracle expert on abstentions {q.theta_expert_hat:.3f}")
