import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ewanet.config import load_builtin_graph
from ewanet.coordgame import PayoffMatrix, enumerate_limiting_be, enumerate_pure_ne
from ewanet.dynamics import BehavioralParams, EWAModel, integrate_model
from ewanet.equilibria import (DEDUP_RADIUS, StartStrategy, count_be, find_fixed_points,
                               find_fixed_points_model, jacobian, near_pure_profiles,
                               risk_dominant_absorption_probe, small_lambda_drift)
from ewanet.netgraph import complete_graph, erdos_renyi, star_graph

from .test_coordgame import conflict_payoffs, coordination_payoffs
from .test_netgraph import graphs

CONFLICT = PayoffMatrix(4, -2, 1, 2)
DYAD = complete_graph(2)
SIX_NODE_PAYOFF = PayoffMatrix(3, -5, 0, 2)


def dyad(psi, lam):
    return BehavioralParams.uniform(2, psi, lam, 1.0)


def test_neutral_jacobian_of_star_example():
    params = BehavioralParams([1, 1, 0.5], [0.5, 0.5, 1], [0.5, 0.5, 0.5])
    # hub first here: star_graph puts the hub at index 0
    jac = jacobian(np.zeros(3), star_graph(3), PayoffMatrix.symmetric(2, -1), params)
    expected = np.array([[-0.875, 0.5625, 1.125], [0.5625, -0.9375, 0], [0.5625, 0, -0.375]])
    assert np.allclose(jac, expected, atol=1e-15)


def test_conflict_dyad_two_basins():
    census = find_fixed_points(DYAD, CONFLICT, dyad(0.5, 1.0))
    assert len(census.records) == 3 and count_be(census) == 2
    stable = census.stable
    assert np.all(stable[0].q_star < 0) and np.all(stable[1].q_star > 0)
    saddle = next(r for r in census.records if not r.stable)
    assert saddle.max_re_eigenvalue > 0
    assert np.allclose(stable[1].q_star, 7.99528, atol=1e-4)


def test_conflict_dyad_unique_equilibrium():
    census = find_fixed_points(DYAD, CONFLICT, dyad(1.0, 0.5))
    assert len(census.records) == 1 and count_be(census) == 1
    assert np.all(census.records[0].q_star > 0)
    assert census.records[0].q_star[0] == pytest.approx(2.3455, abs=1e-4)


def test_census_record_invariants(rng):
    g = erdos_renyi(5, 0.5, seed=3)
    params = BehavioralParams(rng.uniform(0.3, 2, 5), rng.uniform(0.5, 3, 5), rng.uniform(0, 1, 5))
    census = find_fixed_points(g, SIX_NODE_PAYOFF, params, tol=1e-9)
    assert census.records
    for r in census.records:
        assert r.residual <= 1e-9
        assert np.all((r.p_star > 0) & (r.p_star < 1))
        assert r.stable == bool(np.all(r.eigenvalues.real < -1e-8))
    for a in range(len(census.records)):
        for b in range(a):
            assert np.max(np.abs(census.records[a].q_star - census.records[b].q_star)) > DEDUP_RADIUS
    lines = census.to_csv().splitlines()
    assert lines[0] == "root_id,stable,residual," + ",".join(
        [f"q_{i}" for i in range(5)] + [f"p_{i}" for i in range(5)]) + ",max_re_eigenvalue"
    assert len(lines) == 1 + len(census.records)


@pytest.mark.parametrize("psi,lam", [(0.5, 1.0), (1.0, 0.5), (0.5, 2.0)])
def test_perturbation_behaviour(psi, lam, rng):
    g = erdos_renyi(4, 0.6, seed=11)
    model = EWAModel.build(g, CONFLICT, BehavioralParams.uniform(4, psi, lam, 1.0))
    census = find_fixed_points_model(model)
    for r in census.records:
        kicks = rng.normal(size=(10, 4))
        kicks *= 1e-3 / np.linalg.norm(kicks, axis=1, keepdims=True)
        ends = [integrate_model(model, r.q_star + k, horizon=400.0 / psi, conv_tol=1e-11).final for k in kicks]
        gaps = [np.max(np.abs(e - r.q_star)) for e in ends]
        if r.stable:
            assert max(gaps) <= 1e-4
        else:
            # the unstable direction itself is always an escaping perturbation
            eig, vec = np.linalg.eig(model.jacobian(r.q_star))
            v = np.real(vec[:, np.argmax(eig.real)])
            end = integrate_model(model, r.q_star + 1e-3 * v / np.linalg.norm(v),
                                  horizon=400.0 / psi, conv_tol=1e-11).final
            assert max(max(gaps), np.max(np.abs(end - r.q_star))) > 1e-2


def test_census_saturates_under_doubled_starts():
    g = erdos_renyi(5, 0.5, seed=5)
    params = BehavioralParams.uniform(5, 0.5, 2.0, 1.0)
    a = find_fixed_points(g, SIX_NODE_PAYOFF, params, StartStrategy(n_random=16, seed=1))
    b = find_fixed_points(g, SIX_NODE_PAYOFF, params, StartStrategy(n_random=32, seed=2))
    assert len(a.records) == len(b.records)
    for ra, rb in zip(a.records, b.records):
        assert np.max(np.abs(ra.q_star - rb.q_star)) <= DEDUP_RADIUS


def test_absorption_examples():
    rep = risk_dominant_absorption_probe(DYAD, CONFLICT, dyad(1.0, 0.5), starts=[(-8.0, -8.0)])
    assert rep.all_positive
    rep = risk_dominant_absorption_probe(DYAD, CONFLICT, dyad(0.5, 1.0), starts=[(-8.0, -8.0)])
    assert not rep.all_positive and np.all(rep.endpoints[0] < 0)


@settings(max_examples=20)
@given(graphs(max_n=6, connected=True), conflict_payoffs(), st.data())
def test_small_lambda_drift_limit(g, payoff, data):
    eta = np.array(data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n)))
    psi = np.array(data.draw(st.lists(st.floats(0.1, 3), min_size=g.n, max_size=g.n)))
    q = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=g.n, max_size=g.n)))
    limit = small_lambda_drift(q, g, payoff, BehavioralParams(psi, np.ones(g.n), eta))
    tiny = EWAModel.build(g, payoff, BehavioralParams(psi, np.full(g.n, 1e-9), eta)).drift(q)
    assert np.allclose(tiny, limit, atol=1e-6)
    assert np.all(small_lambda_drift(np.zeros(g.n), g, payoff, BehavioralParams(psi, np.ones(g.n), eta)) > 0)


@settings(max_examples=15)
@given(graphs(max_n=5, connected=True), coordination_payoffs(), st.data())
def test_near_pure_equilibria_match_limiting_enumeration(g, payoff, data):
    eta = np.array(data.draw(st.lists(st.floats(0, 1), min_size=g.n, max_size=g.n)))
    params = BehavioralParams(np.full(g.n, 0.01), np.full(g.n, 50.0), eta)
    census = find_fixed_points(g, payoff, params)
    assert near_pure_profiles(census) == enumerate_limiting_be(g, payoff, eta.tolist())


NONMONOTONE_CASES = {
    1: dict(psi=[0.5] * 6, lam=[2] * 6),
    2: dict(psi=[15] * 6, lam=[2] * 6),
    3: dict(psi=[0.5] * 6, lam=[0.06] * 6),
    4: dict(psi=[0.5, 0.5, 15, 0.5, 0.5, 0.5], lam=[2] * 6),
    5: dict(psi=[0.5] * 6, lam=[2, 2, 0.06, 2, 2, 2]),
}
NONMONOTONE_COUNTS = {1: 2, 2: 1, 3: 1, 4: 3, 5: 3}
NONMONOTONE_P = {
    2: [[0.82, 0.82, 0.90, 0.90, 0.82, 0.82]],
    3: [[0.78, 0.78, 0.86, 0.86, 0.78, 0.78]],
    4: [[0, 0, 0.23, 0, 0, 0], [1, 1, 0.94, 1, 1, 1], [1, 1, 0.82, 0.04, 0, 0]],
    5: [[0, 0, 0.25, 0, 0, 0], [1, 1, 0.93, 1, 1, 1], [1, 1, 0.79, 0.01, 0, 0]],
}


def nonmonotone_stable(case):
    g = load_builtin_graph("bridged_triangles")
    c = NONMONOTONE_CASES[case]
    params = BehavioralParams(np.array(c["psi"], float), np.array(c["lam"], float), np.ones(6))
    return find_fixed_points(g, SIX_NODE_PAYOFF, params).stable


def test_nonmonotone_graph_has_two_pure_nash():
    g = load_builtin_graph("bridged_triangles")
    assert g.n == 6 and max(g.degrees) <= 4
    assert len(enumerate_pure_ne(g, SIX_NODE_PAYOFF)) == 2


@pytest.mark.parametrize("case", [1, 2, 3, 4, 5])
def test_nonmonotone_case(case):
    stable = nonmonotone_stable(case)
    assert len(stable) == NONMONOTONE_COUNTS[case]
    if case in NONMONOTONE_P:
        for target in NONMONOTONE_P[case]:
            assert any(np.max(np.abs(r.p_star - target)) <= 0.02 for r in stable)
