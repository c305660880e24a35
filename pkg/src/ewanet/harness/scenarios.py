"""Two-agent vector fields, staged-parameter cascades, and the reinforcing-the-best transform."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..coordgame import PayoffError, PayoffMatrix
from ..dynamics import BehavioralParams, EWAModel, integrate_model
from ..equilibria import DEDUP_RADIUS, newton
from ..netgraph import Graph, max_cohesive_subset


@dataclass
class VectorField:
    grid_q0: np.ndarray
    grid_q1: np.ndarray
    drift: np.ndarray  # shape (res, res, 2), indexed [row of q1, column of q0]
    intersections: list  # isocline crossings refined to fixed points

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["q_0", "q_1", "F_0", "F_1"])
        for a in range(self.grid_q1.size):
            for b in range(self.grid_q0.size):
                writer.writerow([repr(float(self.grid_q0[b])), repr(float(self.grid_q1[a])),
                                 repr(float(self.drift[a, b, 0])), repr(float(self.drift[a, b, 1]))])
        return buf.getvalue()


def _changes_sign(corners) -> bool:
    return corners.min() <= 0.0 <= corners.max()


def vector_field(g: Graph, payoff: PayoffMatrix, params: BehavioralParams,
                 box=(-10.0, 10.0, -10.0, 10.0), resolution: int = 41) -> VectorField:
    """Drift on a regular grid and the cells where both isoclines cross.

    A cell is a candidate when each drift component changes sign over its
    four corners; Newton from the cell centre turns candidates into fixed
    points, which are then deduplicated.
    """
    if g.n != 2:
        raise ValueError("vector fields are drawn for two agents only")
    model = EWAModel.build(g, payoff, params)
    xs = np.linspace(box[0], box[1], resolution)
    ys = np.linspace(box[2], box[3], resolution)
    field_ = np.array([[model.drift(np.array([a, b])) for a in xs] for b in ys])
    roots = []
    for r in range(resolution - 1):
        for c in range(resolution - 1):
            cell = field_[r:r + 2, c:c + 2].reshape(4, 2)
            if not (_changes_sign(cell[:, 0]) and _changes_sign(cell[:, 1])):
                continue
            centre = np.array([(xs[c] + xs[c + 1]) / 2, (ys[r] + ys[r + 1]) / 2])
            root = newton(model, centre)
            if root is None:
                continue
            h = max(xs[1] - xs[0], ys[1] - ys[0])
            if np.max(np.abs(root - centre)) > h:
                continue
            if not any(np.max(np.abs(root - q)) <= DEDUP_RADIUS for q in roots):
                roots.append(root)
    roots.sort(key=lambda q: tuple(q))
    return VectorField(xs, ys, field_, roots)


@dataclass
class CascadeSpec:
    """Parameter levels for the staged cascade construction."""
    c_psi: float = 0.01
    c_lam: float = 10.0
    boundary_psi: float = 50.0
    boundary_lam: float = 0.01
    interior_psi: float = 1.0
    interior_lam: float = 0.01
    eta: float = 1.0
    stage_time: float = 1.0
    horizon: float = 200.0
    staged: bool = True

    @classmethod
    def from_dict(cls, cfg: dict) -> "CascadeSpec":
        return cls(**cfg)


@dataclass
class CascadeTranscript:
    stages: list = field(default_factory=list)  # (time, profile bits with 1 = favours D)
    cascade: bool = False
    horizon_exhausted: bool = False
    threshold: object = None
    d_core: frozenset = frozenset()
    final_q: np.ndarray = None

    @property
    def last_partition(self) -> str:
        return self.stages[-1][1] if self.stages else ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["stage", "time", "favours_d"])
        for k, (t, bits) in enumerate(self.stages):
            writer.writerow([k, repr(float(t)), bits])
        return buf.getvalue()


def cascade_threshold(payoff: PayoffMatrix):
    """2(z - x) / (z - x + w - y): twice the best-response contagion threshold."""
    z, y, x, w = payoff.as_tuple()
    num, den = 2 * (z - x), z - x + w - y
    if all(isinstance(v, int) for v in (num, den)):
        return Fraction(num, den)
    return num / den


def _staged_params(g: Graph, favours_d: np.ndarray, spec: CascadeSpec) -> BehavioralParams:
    n = g.n
    psi = np.empty(n)
    lam = np.empty(n)
    c = ~favours_d
    boundary = favours_d & ((g.adjacency @ c.astype(int)) > 0)
    psi[c], lam[c] = spec.c_psi, spec.c_lam
    psi[favours_d], lam[favours_d] = spec.interior_psi, spec.interior_lam
    psi[boundary], lam[boundary] = spec.boundary_psi, spec.boundary_lam
    return BehavioralParams(psi, lam, np.full(n, spec.eta))


def cascade_scenario(g: Graph, payoff: PayoffMatrix, q0, spec: CascadeSpec | None = None) -> CascadeTranscript:
    """Drive a population toward the efficient action by restaging parameters as agents flip.

    Agents favouring C are made accurate and retentive; D agents touching
    the C group are made forgetful and inaccurate; the remaining D agents are
    inaccurate. After every ``stage_time`` the partition is re-read from the
    signs of q and the parameters rebuilt. With ``staged=False`` the
    parameters chosen for the initial partition are kept throughout, and when
    ``staged=False`` and all levels coincide this is a homogeneous run.
    """
    spec = spec or CascadeSpec()
    if not payoff.has_risk_efficiency_conflict():
        raise PayoffError("cascade scenario needs D risk-dominant and C efficient")
    q = np.array(q0, dtype=float)
    if q.size != g.n or np.any(q == 0):
        raise ValueError("q0 must give every agent a strict initial leaning")
    favours_d = q > 0
    out = CascadeTranscript(threshold=cascade_threshold(payoff))
    out.d_core = max_cohesive_subset(g, np.flatnonzero(favours_d), out.threshold)
    t = 0.0
    out.stages.append((t, "".join("1" if b else "0" for b in favours_d)))
    params = _staged_params(g, favours_d, spec)
    while t < spec.horizon:
        model = EWAModel.build(g, payoff, params)
        traj = integrate_model(model, q, horizon=spec.stage_time, conv_tol=0.0, t0=t, thin=10 ** 9)
        q, t = traj.final, float(traj.t[-1])
        now_d = q > 0
        if np.all(q < 0):
            out.cascade = True
            out.stages.append((t, "0" * g.n))
            break
        if not np.array_equal(now_d, favours_d):
            favours_d = now_d
            out.stages.append((t, "".join("1" if b else "0" for b in favours_d)))
            if spec.staged:
                params = _staged_params(g, favours_d, spec)
    else:
        out.horizon_exhausted = True
    out.final_q = q
    return out


@dataclass
class ReinforceBestResult:
    gammas: np.ndarray
    outcome_at_zero: list  # "D", "C" or "mixed" per gamma, from q0 = 0
    efficient_basin_share: np.ndarray  # share of sampled starts ending all-C
    gamma_hat: float | None  # smallest grid gamma with efficient absorption from q0 = 0

    @property
    def found(self) -> bool:
        return self.gamma_hat is not None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["gamma", "outcome_from_zero", "efficient_basin_share"])
        for gm, o, s in zip(self.gammas, self.outcome_at_zero, self.efficient_basin_share):
            writer.writerow([repr(float(gm)), o, repr(float(s))])
        writer.writerow([])
        writer.writerow(["gamma_hat"])
        writer.writerow(["not found in grid" if self.gamma_hat is None else repr(float(self.gamma_hat))])
        return buf.getvalue()


def _sign_outcome(q) -> str:
    if np.all(q > 0):
        return "D"
    if np.all(q < 0):
        return "C"
    return "mixed"


def reinforce_best_scenario(g: Graph, payoff: PayoffMatrix, gamma_grid, pi_floor: float = -3.0,
                            psi: float = 10.0, lam: float = 0.05, eta: float = 1.0,
                            basin_samples: int = 16, start_scale: float = 1.0,
                            seed: int = 0) -> ReinforceBestResult:
    """Which option absorbs from the neutral state as the payoff exponent gamma grows.

    Runs in the forgetful, inaccurate regime (large psi, small lambda). For
    each gamma it integrates from q0 = 0 and from ``basin_samples`` uniform
    starts in [-start_scale, start_scale]^n.
    """
    if not payoff.has_risk_efficiency_conflict():
        raise PayoffError("reinforce-best scenario needs D risk-dominant and C efficient")
    gammas = np.sort(np.asarray(gamma_grid, dtype=float))
    rng = np.random.Generator(np.random.Philox(seed))
    starts = rng.uniform(-start_scale, start_scale, size=(basin_samples, g.n))
    outcomes, shares = [], []
    for gm in gammas:
        params = BehavioralParams.uniform(g.n, psi, lam, eta, gamma=gm, pi_floor=pi_floor)
        model = EWAModel.build(g, payoff, params)
        horizon = 200.0 / psi
        end = integrate_model(model, np.zeros(g.n), horizon=horizon, conv_tol=1e-10).final
        outcomes.append(_sign_outcome(end))
        ends = [integrate_model(model, s, horizon=horizon, conv_tol=1e-10).final for s in starts]
        shares.append(np.mean([_sign_outcome(e) == "C" for e in ends]) if basin_samples else np.nan)
    hat = next((float(gm) for gm, o in zip(gammas, outcomes) if o == "C"), None)
    return ReinforceBestResult(gammas, outcomes, np.array(shares), hat)
