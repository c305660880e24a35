import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ewanet.coordgame import PayoffError, PayoffMatrix
from ewanet.dynamics import BehavioralParams, EWAModel, integrate_model
from ewanet.influence import (DefectiveSpectrum, InfluenceReport, PredictionUndefined,
                              comparative_statics_probe, dominant_pair, epsilon_sweep, full_spectrum,
                              influence_report, linearized_solution, neutral_jacobian,
                              neutral_stability, predict_coordination, principal_term)
from ewanet.netgraph import build_graph, complete_graph, eigenvector_centrality, erdos_renyi, star_graph

from .test_netgraph import graphs

STAR = star_graph(3)
STAR_PAYOFF = PayoffMatrix.symmetric(2, -1)
STAR_PARAMS = BehavioralParams([1, 1, 0.5], [0.5, 0.5, 1], [0.5, 0.5, 0.5])
STAR_Q0 = np.array([0.1, 0.1, -0.18])


@st.composite
def neutral_instances(draw, max_n=8):
    g = draw(graphs(max_n=max_n, connected=True))
    n = g.n
    vec = lambda lo, hi: np.array(draw(st.lists(st.floats(lo, hi), min_size=n, max_size=n)))
    h = draw(st.floats(-2, 3))
    l = h - draw(st.floats(0.2, 3))
    return g, (h, l), BehavioralParams(vec(0.1, 2.0), vec(0.1, 3.0), vec(0.0, 1.0))


def test_star_example_eigen_analysis():
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    assert rep.kappa1 == pytest.approx(0.31, abs=0.01)
    assert np.allclose(rep.v1 / rep.v1[2], [1.21, 0.55, 1.00], atol=0.01)
    assert np.allclose(rep.xi, [0.32, 0.15, 0.53], atol=0.01)
    assert np.allclose(np.sort(rep.subdominant_eigenvalues), [-1.74, -0.76], atol=0.01)
    assert rep.unstable and not neutral_stability(rep)
    assert rep.xi @ STAR_Q0 == pytest.approx(-0.049, abs=0.002)
    assert predict_coordination(rep, STAR_Q0) == "C"


def test_star_example_simulation_ends_efficient():
    model = EWAModel.build(STAR, STAR_PAYOFF, STAR_PARAMS)
    assert np.all(integrate_model(model, STAR_Q0).final < 0)


def test_star_example_principal_term_turns_negative():
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    assert np.all(principal_term(rep, STAR_Q0, 10.0) < 0)
    spec = full_spectrum(rep.jacobian)
    full, principal = linearized_solution(spec, STAR_Q0, 10.0)
    assert np.all(full < 0) and np.allclose(principal, principal_term(rep, STAR_Q0, 10.0))


def test_linearised_flow_tracks_simulation_mid_window():
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    spec = full_spectrum(rep.jacobian)
    q0 = 1e-3 * STAR_Q0 / np.linalg.norm(STAR_Q0)
    model = EWAModel.build(STAR, STAR_PAYOFF, STAR_PARAMS)
    traj = integrate_model(model, q0, horizon=15.0, dt=0.01, conv_tol=0.0)
    for t in (2.0, 5.0, 10.0):
        k = int(round(t / 0.01))
        full, _ = linearized_solution(spec, q0, t)
        assert np.linalg.norm(full - traj.q[k]) / np.linalg.norm(q0) <= 0.1


@settings(max_examples=40)
@given(neutral_instances(), st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_linearised_identity_at_zero(inst, q):
    g, hl, params = inst
    try:
        spec = full_spectrum(neutral_jacobian(g, *hl, params))
    except DefectiveSpectrum:
        return
    q0 = np.array(q[:g.n])
    assert np.allclose(linearized_solution(spec, q0, 0.0)[0], q0, atol=1e-7)


def test_neutral_jacobian_matches_analytic_jacobian():
    model = EWAModel.build(STAR, STAR_PAYOFF, STAR_PARAMS)
    assert np.allclose(model.jacobian(np.zeros(3)), neutral_jacobian(STAR, 2.0, -1.0, STAR_PARAMS), atol=1e-15)


@settings(max_examples=40)
@given(graphs(max_n=9, connected=True), st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0.2, 3))
def test_homogeneous_belief_case(g, psi, lam, gap):
    h, l = 1.0, 1.0 - gap
    params = BehavioralParams.uniform(g.n, psi, lam, 1.0)
    rep = influence_report(g, (h, l), params)
    v, kmax = eigenvector_centrality(g)
    assert rep.kappa1 == pytest.approx(-psi + lam * (h - l) / 2 * kmax, abs=1e-8)
    if g.n > 1 and rep.subdominant_eigenvalues.size and rep.kappa1 - rep.subdominant_eigenvalues.max() > 1e-3:
        assert np.allclose(rep.xi, v / v.sum(), atol=1e-6)
    assert neutral_stability(rep) == (kmax < 2 * psi / (lam * (h - l)))


@settings(max_examples=60)
@given(neutral_instances())
def test_report_invariants(inst):
    g, hl, params = inst
    rep = influence_report(g, hl, params)
    jac = rep.jacobian
    assert np.max(np.abs(jac @ rep.v1 - rep.kappa1 * rep.v1)) <= 1e-10 * max(1, np.abs(rep.v1).max())
    assert np.max(np.abs(jac.T @ rep.xi - rep.kappa1 * rep.xi)) <= 1e-10
    assert np.all(rep.xi > 0) and rep.xi.sum() == pytest.approx(1.0, abs=1e-12)
    assert rep.xi @ rep.v1 == pytest.approx(1.0, abs=1e-9)
    assert rep.all_positive_v1
    if rep.subdominant_eigenvalues.size:
        assert np.all(rep.subdominant_eigenvalues < rep.kappa1)


def test_shrinking_gap_stabilises():
    g = complete_graph(4)
    params = BehavioralParams.uniform(4, 0.5, 1.0, 1.0)
    assert neutral_stability(influence_report(g, (1.0, 1.0 - 1e-3), params))
    # with eta < 1 the own-play term (1 - eta) d (h + l) lambda / 4 can outweigh psi
    mixed = BehavioralParams.uniform(4, 0.5, 1.0, 0.5)
    assert not neutral_stability(influence_report(g, (1.0, 1.0 - 1e-3), mixed))


def test_prediction_basics():
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    assert predict_coordination(rep, rep.v1) == "D"
    assert predict_coordination(rep, -rep.v1) == "C"
    assert predict_coordination(rep, np.zeros(3)) == "indeterminate"
    orth = np.array([rep.xi[1], -rep.xi[0], 0.0])
    assert predict_coordination(rep, orth) == "indeterminate"


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(1e-6, 1e6))
def test_prediction_scale_free(q, scale):
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    q0 = np.array(q)
    assert predict_coordination(rep, q0) == predict_coordination(rep, scale * q0)


def test_prediction_refusals():
    stable = influence_report(STAR, STAR_PAYOFF, BehavioralParams.uniform(3, 5.0, 0.1, 0.5))
    assert not stable.unstable
    with pytest.raises(PredictionUndefined):
        predict_coordination(stable, STAR_Q0)
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    mixed = InfluenceReport(rep.kappa1, np.array([1.0, -0.1, 1.0]), rep.xi, rep.subdominant_eigenvalues,
                            True, False, rep.jacobian)
    with pytest.raises(PredictionUndefined):
        predict_coordination(mixed, STAR_Q0)


def test_input_refusals():
    with pytest.raises(PayoffError):
        influence_report(STAR, PayoffMatrix(4, -2, 1, 2), STAR_PARAMS)
    with pytest.raises(PayoffError):
        influence_report(STAR, (1.0, 1.0), STAR_PARAMS)
    with pytest.raises(ValueError):
        influence_report(build_graph(3, [(0, 1)]), STAR_PAYOFF, STAR_PARAMS)


def test_full_spectrum_refusals():
    jac = neutral_jacobian(complete_graph(4), 1.0, -1.0, BehavioralParams.uniform(4, 1.0, 1.0, 1.0))
    with pytest.raises(DefectiveSpectrum):
        full_spectrum(jac)  # repeated eigenvalue -1 - 1
    with pytest.raises(DefectiveSpectrum):
        full_spectrum(np.eye(3), cap=2)
    big = erdos_renyi(60, 0.1, seed=1)
    rep = influence_report(big, (1.0, -1.0), BehavioralParams.uniform(60, 1.0, 1.0, 0.5))
    assert rep.subdominant_eigenvalues.size == 0 and rep.xi.size == 60


def test_dominant_pair_on_star():
    kappa, v, xi = dominant_pair(neutral_jacobian(STAR, 2.0, -1.0, STAR_PARAMS))
    assert kappa == pytest.approx(np.max(np.linalg.eigvals(neutral_jacobian(STAR, 2.0, -1.0, STAR_PARAMS)).real))


def test_comparative_statics_star():
    for agent in range(3):
        probe = comparative_statics_probe(STAR, STAR_PAYOFF, STAR_PARAMS, agent, delta=0.1)
        assert probe.psi_effect < 0
        assert probe.lambda_effect > 0


def test_comparative_statics_belief_case_with_negative_sum():
    # h + l < 0 but eta_i = 1: lambda_i still raises xi_i
    g = erdos_renyi(6, 0.5, seed=2)
    params = BehavioralParams([0.5, 1, 0.7, 1.2, 0.9, 0.4], [1, 2, 0.5, 1, 1.5, 0.8], [1, 0.2, 1, 0.5, 1, 0.3])
    for agent in (0, 2, 4):
        probe = comparative_statics_probe(g, (-1.0, -2.5), params, agent)
        assert probe.lambda_effect > 0 and probe.psi_effect < 0


@settings(max_examples=60)
@given(neutral_instances(max_n=7), st.data())
def test_comparative_statics_signs(inst, data):
    g, (h, l), params = inst
    agent = data.draw(st.integers(0, g.n - 1))
    probe = comparative_statics_probe(g, (h, l), params, agent)
    assert probe.psi_effect < 0
    if h + l > 0 or params.eta[agent] == 1.0:
        assert probe.lambda_effect > 0


def test_report_csv():
    rep = influence_report(STAR, STAR_PAYOFF, STAR_PARAMS)
    lines = rep.to_csv(STAR, STAR_PARAMS).splitlines()
    assert lines[0] == "agent,xi,v1,degree,psi,lambda,eta"
    assert lines[1].startswith("0,") and lines[1].split(",")[3] == "2"
    assert lines[5] == "kappa1,unstable" and lines[6].endswith(",1")


def sweep_instances(count, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    out = []
    while len(out) < count:
        n = int(rng.integers(4, 13))
        g = erdos_renyi(n, 0.4, seed=int(rng.integers(1 << 30)))
        h = float(rng.uniform(0.5, 3))
        l = h - float(rng.uniform(0.5, 3))
        params = BehavioralParams(rng.uniform(0.1, 1, n), rng.uniform(0.5, 3, n), rng.uniform(0, 1, n))
        payoff = PayoffMatrix.symmetric(h, l)
        if influence_report(g, payoff, params).unstable:
            out.append((g, payoff, params))
    return out


def test_prediction_sharpens_as_start_shrinks():
    shares = epsilon_sweep(sweep_instances(60, seed=3), seed=3)
    values = [shares[e] for e in (1e-1, 1e-2, 1e-3)]
    assert values == sorted(values)
    assert values[-1] > 0.99
