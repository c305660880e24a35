# %% [markdown]
# # Steering toward the efficient action
#
# Two interventions. Staging parameters along a line lets a C seed convert
# its D neighbours one after another. Raising payoffs to a power gamma
# above a floor makes forgetful, noisy agents settle on C instead of D.

# %%
import numpy as np

from ewanet.coordgame import PayoffMatrix
from ewanet.harness.scenarios import CascadeSpec, cascade_scenario, reinforce_best_scenario
from ewanet.netgraph import path_graph

payoff = PayoffMatrix(4, -2, 1, 2)
line = path_graph(10)
q0 = [-1.0] * 5 + [1.0] * 5

# %%
staged = cascade_scenario(line, payoff, q0)
print("threshold", staged.threshold, "cascade", staged.cascade)
for t, bits in staged.stages:
    print(f"  t={t:7.2f} {bits}")

# %%
flat = CascadeSpec(c_psi=0.1, c_lam=10, boundary_psi=0.1, boundary_lam=10,
                   interior_psi=0.1, interior_lam=10, staged=False, horizon=50.0)
print("homogeneous run cascades:", cascade_scenario(line, payoff, q0, flat).cascade)

# %%
res = reinforce_best_scenario(path_graph(4), payoff, [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0])
for gm, out, share in zip(res.gammas, res.outcome_at_zero, res.efficient_basin_share):
    print(f"gamma={gm:4.2f} from q0=0: {out}   share of sampled starts ending C: {share:.2f}")
print("smallest gamma with C from the neutral start:", res.gamma_hat)
