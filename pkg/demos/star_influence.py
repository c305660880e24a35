# %% [markdown]
# # Who tips a star
#
# Symmetric payoffs make q = 0 a fixed point. When it is unstable the left
# eigenvector xi of the Jacobian there weighs each agent's initial leaning;
# the sign of xi . q0 predicts which consensus the population reaches.

# %%
import numpy as np

from ewanet.coordgame import PayoffMatrix
from ewanet.dynamics import BehavioralParams, integrate
from ewanet.influence import (comparative_statics_probe, full_spectrum, influence_report,
                              linearized_solution, predict_coordination)
from ewanet.netgraph import star_graph

g = star_graph(3)  # agent 0 is the hub
payoff = PayoffMatrix.symmetric(2, -1)
params = BehavioralParams([1, 1, 0.5], [0.5, 0.5, 1], [0.5, 0.5, 0.5])
rep = influence_report(g, payoff, params)
print("kappa1", round(rep.kappa1, 4), "xi", np.round(rep.xi, 3), "v1", np.round(rep.v1 / rep.v1[2], 3))

# %%
# two agents lean D, the accurate leaf leans C harder
q0 = np.array([0.1, 0.1, -0.18])
print("xi.q0 =", round(float(rep.xi @ q0), 4), "->", predict_coordination(rep, q0))
print("simulated:", np.round(integrate(q0, g, payoff, params).final, 3))

# %%
spec = full_spectrum(rep.jacobian)
for t in (0.0, 2.0, 5.0):
    full, principal = linearized_solution(spec, q0, t)
    print(f"t={t}: linearised {np.round(full, 4)}  leading term {np.round(principal, 4)}")

# %%
for agent in range(3):
    probe = comparative_statics_probe(g, payoff, params, agent, delta=0.1)
    print(f"agent {agent}: d xi / d psi {probe.psi_effect:+.4f}, d xi / d lambda {probe.lambda_effect:+.4f}")
