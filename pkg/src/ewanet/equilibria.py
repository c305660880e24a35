"""Fixed points of the EWA drift, their stability, and behavioural-equilibrium censuses."""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .coordgame import PayoffMatrix, PureProfile
from .dynamics import BehavioralParams, EWAModel, integrate_batch, integrate_model, logit_response
from .netgraph import Graph

log = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-8
DEDUP_RADIUS = 1e-5
MAX_NEWTON_ITER = 60
CORNER_LIMIT = 12
NEUTRAL_CORNER_LIMIT = 6
WITNESS_MAX_STEPS = 20_000  # endpoints only seed Newton, so they need not have converged


@dataclass
class FixedPointRecord:
    q_star: np.ndarray
    p_star: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    stable: bool
    marginal: bool
    basin_witnesses: list = field(default_factory=list)

    @property
    def max_re_eigenvalue(self) -> float:
        return float(np.max(self.eigenvalues.real))


@dataclass
class BECensus:
    records: list
    starts_used: int
    duplicates_merged: int

    @property
    def stable(self) -> list:
        return [r for r in self.records if r.stable]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = len(self.records[0].q_star) if self.records else 0
        writer.writerow(["root_id", "stable", "residual"] + [f"q_{i}" for i in range(n)]
                        + [f"p_{i}" for i in range(n)] + ["max_re_eigenvalue"])
        for k, r in enumerate(self.records):
            writer.writerow([k, int(r.stable), repr(r.residual)] + [repr(float(v)) for v in r.q_star]
                            + [repr(float(v)) for v in r.p_star] + [repr(r.max_re_eigenvalue)])
        return buf.getvalue()


@dataclass
class StartStrategy:
    """Where Newton starts from. Corners are all sign patterns scaled by U_i/psi_i; random
    starts cycle through the same scales; bridge starts sit between pairs of found roots."""
    corners: bool = True
    corner_scales: tuple = (1.0, 0.1)
    n_random: int = 32
    n_integration: int = 4
    seed: int = 0
    bridge_weights: tuple = (0.25, 0.5, 0.75)


def jacobian(q, g: Graph, payoff: PayoffMatrix, params: BehavioralParams, t: float = 0.0) -> np.ndarray:
    return EWAModel.build(g, payoff, params).jacobian(np.asarray(q, dtype=float), t)


def finite_difference_jacobian(model: EWAModel, q, h: float = 1e-6) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    jac = np.empty((q.size, q.size))
    for j in range(q.size):
        e = np.zeros_like(q)
        e[j] = h
        jac[:, j] = (model.drift(q + e) - model.drift(q - e)) / (2 * h)
    return jac


def newton_batch(model: EWAModel, starts, tol: float = 1e-9, max_iter: int = MAX_NEWTON_ITER) -> np.ndarray:
    """Damped Newton on F(q) = 0 from every row of ``starts`` at once.

    Steps are first shrunk into the magnitude-bound box (near-flat logit
    regions give huge raw steps, and no root lies outside the box), then
    halved until ||F||_inf decreases. Rows that fail come back as NaN.
    """
    q = np.array(starts, dtype=float, ndmin=2)
    f = model.drift(q)
    norm = np.max(np.abs(f), axis=1)
    bound = np.maximum(model.magnitude_bound(), 1e-12)
    live = norm > tol
    failed = np.zeros(len(q), dtype=bool)
    for _ in range(max_iter):
        if not live.any():
            break
        rows = np.flatnonzero(live)
        jac = model.jacobian_batch(q[rows])
        rhs = -f[rows]
        try:
            step = np.linalg.solve(jac, rhs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.empty_like(rhs)
            for k, (j, b) in enumerate(zip(jac, rhs)):
                try:
                    step[k] = np.linalg.solve(j, b)
                except np.linalg.LinAlgError:
                    step[k] = np.linalg.lstsq(j, b, rcond=None)[0]
        reach = np.max(np.abs(step) / bound, axis=1)
        alpha = np.where(reach > 1.0, 1.0 / np.maximum(reach, 1.0), 1.0)
        pending = np.ones(len(rows), dtype=bool)
        while pending.any():
            k = np.flatnonzero(pending)
            q_try = q[rows[k]] + alpha[k, None] * step[k]
            f_try = model.drift(q_try)
            n_try = np.max(np.abs(f_try), axis=1)
            ok = np.isfinite(n_try) & (n_try < norm[rows[k]])
            acc = rows[k[ok]]
            q[acc], f[acc], norm[acc] = q_try[ok], f_try[ok], n_try[ok]
            pending[k[ok]] = False
            alpha[k[~ok]] *= 0.5
            stuck = k[~ok][alpha[k[~ok]] <= 1e-10]
            failed[rows[stuck]] = True
            pending[stuck] = False
        live = (norm > tol) & ~failed
    q[failed | (norm > tol)] = np.nan
    return q


def newton(model: EWAModel, q0, tol: float = 1e-9, max_iter: int = MAX_NEWTON_ITER):
    """Damped Newton from one start; returns q or None."""
    root = newton_batch(model, np.asarray(q0, dtype=float)[None, :], tol, max_iter)[0]
    return None if np.isnan(root).any() else root


def classify(model: EWAModel, q_star) -> FixedPointRecord:
    eig = np.linalg.eigvals(model.jacobian(q_star))
    top = float(np.max(eig.real))
    return FixedPointRecord(
        q_star=np.asarray(q_star, dtype=float),
        p_star=logit_response(q_star, model.params.lam),
        residual=float(np.max(np.abs(model.drift(q_star)))),
        eigenvalues=eig,
        stable=top < -STABILITY_MARGIN,
        marginal=abs(top) <= STABILITY_MARGIN,
    )


def _starts(model: EWAModel, strategy: StartStrategy, rng: np.random.Generator):
    n = model.n
    bound = model.magnitude_bound()
    starts = [np.zeros(n)]
    if strategy.corners and n <= CORNER_LIMIT:
        # small networks also get a neutral level per agent, which is where saddles hide
        levels = (-1.0, 0.0, 1.0) if n <= NEUTRAL_CORNER_LIMIT else (-1.0, 1.0)
        for signs in itertools.product(levels, repeat=n):
            if not any(signs):
                continue
            for scale in strategy.corner_scales:
                starts.append(scale * np.array(signs) * bound)
    scales = strategy.corner_scales or (1.0,)
    for k in range(strategy.n_random):
        starts.append(scales[k % len(scales)] * rng.uniform(-bound, bound))
    return starts


def find_fixed_points_model(model: EWAModel, starts: StartStrategy | None = None,
                            tol: float = 1e-9, extra_starts=()) -> BECensus:
    strategy = starts or StartStrategy()
    rng = np.random.Generator(np.random.Philox(strategy.seed))
    seeds = _starts(model, strategy, rng) + [np.asarray(s, float) for s in extra_starts]
    witnesses = []
    bound = model.magnitude_bound()
    if strategy.n_integration:
        # the batch integrator takes long steps once states saturate, which keeps
        # small-psi, large-lambda regimes affordable
        q0s = [rng.uniform(-bound, bound) for _ in range(strategy.n_integration)]
        res = integrate_batch([model] * len(q0s), q0s, horizon=200.0 / float(np.min(model.params.psi)),
                              conv_tol=1e-7, max_steps=WITNESS_MAX_STEPS)
        for q0, end in zip(q0s, res.final):
            seeds.append(end)
            witnesses.append((q0, end))
    records = []
    merged = 0

    def absorb(batch):
        nonlocal merged
        for root in newton_batch(model, batch, tol):
            if np.isnan(root).any():
                continue
            if any(np.max(np.abs(root - r.q_star)) <= DEDUP_RADIUS for r in records):
                merged += 1
                continue
            records.append(classify(model, root))

    absorb(np.array(seeds))
    failed_before = len(seeds) - merged - len(records)
    if failed_before:
        log.debug("newton failed from %d of %d starts", failed_before, len(seeds))
    # saddles separate basins, so points between stable roots are good extra starts
    stable = [r.q_star for r in records if r.stable]
    bridges = [(1 - w) * a + w * b for a, b in itertools.combinations(stable, 2)
               for w in strategy.bridge_weights]
    if bridges:
        absorb(np.array(bridges))
    n_starts = len(seeds) + len(bridges)
    for q0, end in witnesses:
        for r in records:
            if np.max(np.abs(end - r.q_star)) <= 1e-3 * max(1.0, float(np.max(np.abs(r.q_star)))):
                r.basin_witnesses.append(q0)
                break
    records.sort(key=lambda r: tuple(r.q_star))
    return BECensus(records, n_starts, merged)


def find_fixed_points(g: Graph, payoff: PayoffMatrix, params: BehavioralParams,
                      starts: StartStrategy | None = None, tol: float = 1e-9) -> BECensus:
    return find_fixed_points_model(EWAModel.build(g, payoff, params), starts, tol)


def count_be(census: BECensus) -> int:
    return sum(1 for r in census.records if r.stable)


@dataclass
class AbsorptionReport:
    endpoints: np.ndarray
    statuses: list
    all_positive: bool


def risk_dominant_absorption_probe(g: Graph, payoff: PayoffMatrix, params: BehavioralParams,
                                   sample_starts: int = 20, seed: int = 0, starts=(),
                                   horizon: float | None = None) -> AbsorptionReport:
    """Integrate from sampled starts, including strongly efficient-leaning ones, and check q* > 0."""
    if not payoff.has_risk_efficiency_conflict():
        raise ValueError("absorption probe needs a payoff where D is risk-dominant and C efficient")
    model = EWAModel.build(g, payoff, params)
    bound = model.magnitude_bound()
    rng = np.random.Generator(np.random.Philox(seed))
    q0s = [np.asarray(s, float) for s in starts]
    q0s.append(-bound)
    q0s.append(-0.5 * bound)
    while len(q0s) < max(sample_starts, len(starts) + 2):
        q0s.append(rng.uniform(-bound, bound))
    if horizon is None:
        horizon = 100.0 / float(np.min(params.psi))
    ends, statuses = [], []
    for q0 in q0s:
        traj = integrate_model(model, q0, horizon=horizon, conv_tol=1e-8)
        ends.append(traj.final)
        statuses.append(traj.status)
    ends = np.array(ends)
    return AbsorptionReport(ends, statuses, bool(np.all(ends > 0)))


def small_lambda_drift(q, g: Graph, payoff: PayoffMatrix, params: BehavioralParams) -> np.ndarray:
    """Limit of the drift as every lambda_i -> 0 (all agents randomise 50/50)."""
    z, y, x, w = (float(v) for v in payoff.as_tuple())
    deg = g.adjacency.sum(axis=1)
    return -params.psi * np.asarray(q, float) + (w + x - y - z) / 2 * (1 + params.eta) / 2 * deg


def near_pure_profiles(census: BECensus, margin: float = 0.05) -> set:
    """Pure profiles (1 = D) of stable records whose p* lies within ``margin`` of a corner."""
    out = set()
    for r in census.stable:
        p = r.p_star
        if np.all((p <= margin) | (p >= 1.0 - margin)):
            out.add(PureProfile(tuple(int(v >= 0.5) for v in p)))
    return out
