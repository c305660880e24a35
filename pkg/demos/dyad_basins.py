# %% [markdown]
# # Two agents, two basins
#
# D is risk-dominant and C efficient. With long memory and sharp choice the
# dyad has two stable states, one per action; with shorter memory and
# noisier choice only the risk-dominant one survives.

# %%
import numpy as np

from ewanet.coordgame import PayoffMatrix, validate
from ewanet.dynamics import BehavioralParams, integrate
from ewanet.equilibria import find_fixed_points
from ewanet.harness.scenarios import vector_field
from ewanet.netgraph import complete_graph

payoff = PayoffMatrix(4, -2, 1, 2)
dyad = complete_graph(2)
print(validate(payoff))

# %%
for psi, lam in [(0.5, 1.0), (1.0, 0.5)]:
    params = BehavioralParams.uniform(2, psi, lam, 1.0)
    census = find_fixed_points(dyad, payoff, params)
    print(f"psi={psi} lambda={lam}")
    for r in census.records:
        print(f"  q*={np.round(r.q_star, 4)} p*={np.round(r.p_star, 3)} stable={r.stable}")

# %%
# the efficient state is reachable only while it is stable
params = BehavioralParams.uniform(2, 0.5, 1.0, 1.0)
for q0 in ([5, 5], [-8, -8], [0.2, -0.3]):
    traj = integrate(q0, dyad, payoff, params)
    print(q0, "->", np.round(traj.final, 3), traj.status)

# %%
vf = vector_field(dyad, payoff, params, resolution=31)
print("isocline crossings:", [np.round(q, 3).tolist() for q in vf.intersections])
