"""Influence analysis at the neutral state q = 0 of a symmetric-choice game.

The Jacobian at the origin is a Metzler matrix (nonnegative off-diagonal), so
its eigenvalue with the largest real part is real and simple on a connected
graph, and J + sI is nonnegative for a large enough shift s. Everything below
works on that shifted matrix with power iteration.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .coordgame import PayoffError, PayoffMatrix
from .dynamics import BehavioralParams
from .netgraph import ConvergenceError, Graph, is_connected

FULL_SPECTRUM_CAP = 50
EIGEN_GAP_MIN = 1e-8


class PredictionUndefined(ValueError):
    pass


class DefectiveSpectrum(RuntimeError):
    pass


def neutral_jacobian(g: Graph, h: float, l: float, params: BehavioralParams) -> np.ndarray:
    """Closed-form Jacobian of the symmetric-choice drift at q = 0."""
    adj = g.adjacency.astype(float)
    deg = adj.sum(axis=1)
    psi, lam, eta = params.psi, params.lam, params.eta
    jac = adj * ((1 + eta) * (h - l) / 4.0)[:, None] * lam[None, :]
    jac[np.diag_indices_from(jac)] = -psi + (1 - eta) * deg * (h + l) * lam / 4.0
    return jac


def metzler_shift(mat: np.ndarray) -> float:
    off = np.abs(mat - np.diag(np.diag(mat)))
    return float(np.max(np.abs(np.diag(mat))) + np.max(off.sum(axis=1)))


def _power_iteration(mat: np.ndarray, shift: float, tol: float, max_iter: int, v0=None):
    """Dominant eigenpair of ``mat`` via iteration on mat + shift*I.

    Every 64 plain steps the iteration matrix is squared, which keeps the
    method a power iteration while cutting the step count on small gaps.
    Returns (kappa, v) with ||v||_2 = 1 and the residual checked on ``mat``.
    """
    n = mat.shape[0]
    m = mat + shift * np.eye(n)
    v = np.ones(n) / np.sqrt(n) if v0 is None else v0 / np.linalg.norm(v0)
    it = m.copy()
    steps = 0
    while steps < max_iter:
        for _ in range(64):
            w = it @ v
            norm = np.linalg.norm(w)
            if norm == 0.0:
                raise ConvergenceError("iteration collapsed to the zero vector")
            v = w / norm
            steps += 1
        for _ in range(3):
            w = m @ v
            v = w / np.linalg.norm(w)
        mv = mat @ v
        kappa = float(v @ mv)
        if np.max(np.abs(mv - kappa * v)) <= tol:
            return kappa, v
        it = it @ it
        it /= np.max(np.abs(it))
    raise ConvergenceError(f"power iteration did not reach residual {tol} in {max_iter} steps")


def _orient(v):
    return -v if v.sum() < 0 else v


@dataclass
class InfluenceReport:
    kappa1: float
    v1: np.ndarray
    xi: np.ndarray
    subdominant_eigenvalues: np.ndarray
    unstable: bool
    all_positive_v1: bool
    jacobian: np.ndarray = field(repr=False)

    def to_csv(self, g: Graph, params: BehavioralParams) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["agent", "xi", "v1", "degree", "psi", "lambda", "eta"])
        deg = g.degrees
        for i in range(len(self.xi)):
            writer.writerow([i, repr(float(self.xi[i])), repr(float(self.v1[i])), int(deg[i]),
                             repr(float(params.psi[i])), repr(float(params.lam[i])),
                             repr(float(params.eta[i]))])
        writer.writerow([])
        writer.writerow(["kappa1", "unstable"])
        writer.writerow([repr(self.kappa1), int(self.unstable)])
        return buf.getvalue()


def _symmetric_hl(payoff):
    if isinstance(payoff, PayoffMatrix):
        if not payoff.is_symmetric:
            raise PayoffError("influence analysis needs symmetric-choice payoffs (z = w, y = x)")
        h, l = float(payoff.z), float(payoff.y)
    else:
        h, l = (float(v) for v in payoff)
    if not h > l:
        raise PayoffError(f"need h > l, got h={h}, l={l}")
    return h, l


def dominant_pair(jac: np.ndarray, tol: float = 1e-10, max_iter: int = 200_000):
    """(kappa1, v1, u1) with u1 L1-normalised and v1 scaled so that u1 . v1 = 1."""
    shift = metzler_shift(jac)
    kappa, v = _power_iteration(jac, shift, tol, max_iter)
    kappa_t, u = _power_iteration(jac.T, shift, tol, max_iter)
    v, u = _orient(v), _orient(u)
    if abs(kappa - kappa_t) > 1e3 * tol * max(1.0, abs(kappa)):
        raise ConvergenceError(f"left/right dominant eigenvalues disagree: {kappa} vs {kappa_t}")
    xi = u / u.sum() if np.all(u >= -tol) else u / np.linalg.norm(u)
    v = v / (xi @ v)
    return kappa, v, xi


@dataclass
class Spectrum:
    """Eigenvalues in decreasing order with biorthonormal eigenvectors (u_r . v_r = 1)."""
    kappas: np.ndarray
    right: np.ndarray  # columns v_r
    left: np.ndarray  # columns u_r


def full_spectrum(jac: np.ndarray, tol: float = 1e-9, max_iter: int = 200_000,
                  cap: int = FULL_SPECTRUM_CAP) -> Spectrum:
    """All eigenpairs by shifted power iteration with Hotelling deflation.

    Each found eigenvalue is moved to -shift, the bottom of the shifted
    spectrum, so the next iteration picks the next largest.
    """
    n = jac.shape[0]
    if n > cap:
        raise DefectiveSpectrum(f"full decomposition capped at n={cap}, got {n}")
    shift = metzler_shift(jac)
    work = jac.copy()
    kappas, rights, lefts = [], [], []
    for _ in range(n):
        try:
            kappa, v = _power_iteration(work, shift, tol, max_iter)
            kappa_t, u = _power_iteration(work.T, shift, tol, max_iter)
        except ConvergenceError as exc:
            raise DefectiveSpectrum(f"deflation stalled after {len(kappas)} eigenpairs") from exc
        if kappas and min(abs(kappa - k) for k in kappas) < EIGEN_GAP_MIN:
            raise DefectiveSpectrum("eigenvalues closer than the gap threshold")
        denom = u @ v
        if abs(denom) < EIGEN_GAP_MIN:
            raise DefectiveSpectrum("left and right eigenvectors nearly orthogonal")
        v = _orient(v)
        u = u / (u @ v)
        kappas.append(kappa)
        rights.append(v)
        lefts.append(u)
        work = work - (kappa + shift) * np.outer(v, u)
    order = np.argsort(kappas)[::-1]
    return Spectrum(np.array(kappas)[order], np.array(rights).T[:, order], np.array(lefts).T[:, order])


def influence_report(g: Graph, payoff, params: BehavioralParams, tol: float = 1e-10,
                     max_iter: int = 200_000, spectrum_cap: int = FULL_SPECTRUM_CAP) -> InfluenceReport:
    """Dominant eigenpair of the neutral-state Jacobian and the influence vector xi."""
    h, l = _symmetric_hl(payoff)
    if not is_connected(g):
        raise ValueError("influence analysis needs a connected graph")
    jac = neutral_jacobian(g, h, l, params)
    kappa, v1, xi = dominant_pair(jac, tol, max_iter)
    sub = np.array([])
    if g.n <= spectrum_cap:
        try:
            sub = full_spectrum(jac, max(tol, 1e-9), max_iter, spectrum_cap).kappas[1:]
        except DefectiveSpectrum:
            sub = np.array([])
    return InfluenceReport(
        kappa1=kappa, v1=v1, xi=xi, subdominant_eigenvalues=sub,
        unstable=kappa > 0, all_positive_v1=bool(np.all(v1 > 0)), jacobian=jac,
    )


def neutral_stability(report: InfluenceReport) -> bool:
    """True when the neutral state attracts nearby trajectories."""
    return report.kappa1 < 0


def predict_coordination(report: InfluenceReport, q0) -> str:
    """'D', 'C' or 'indeterminate' from the sign of xi . q0."""
    if not report.unstable:
        raise PredictionUndefined("neutral state is stable; no action is selected")
    if not report.all_positive_v1:
        raise PredictionUndefined("dominant right eigenvector is not entrywise positive")
    q0 = np.asarray(q0, dtype=float)
    score = float(report.xi @ q0)
    if abs(score) <= 1e-12 * np.linalg.norm(q0) or not np.any(q0):
        return "indeterminate"
    return "D" if score > 0 else "C"


def linearized_solution(spectrum: Spectrum, q0, t):
    """(full, principal): the linearised flow from q0 at time t and its first eigen-term."""
    q0 = np.asarray(q0, dtype=float)
    weights = spectrum.left.T @ q0 * np.exp(spectrum.kappas * t)
    full = spectrum.right @ weights
    principal = spectrum.right[:, 0] * weights[0]
    return full, principal


def principal_term(report: InfluenceReport, q0, t):
    """First eigen-term alone; available when the full spectrum is not."""
    return float(report.xi @ np.asarray(q0, float)) * np.exp(report.kappa1 * t) * report.v1


@dataclass
class StaticsProbe:
    agent: int
    delta: float
    xi_base: float
    xi_psi_up: float
    xi_lambda_up: float
    gap: float  # kappa1 - kappa2 at base, for degeneracy diagnostics

    @property
    def psi_effect(self) -> float:
        return self.xi_psi_up - self.xi_base

    @property
    def lambda_effect(self) -> float:
        return self.xi_lambda_up - self.xi_base


def comparative_statics_probe(g: Graph, payoff, params: BehavioralParams, agent: int,
                              delta: float = 1e-4, tol: float = 1e-12) -> StaticsProbe:
    """Finite-difference response of xi_agent to psi_agent and lambda_agent."""
    h, l = _symmetric_hl(payoff)

    def xi_of(p):
        return dominant_pair(neutral_jacobian(g, h, l, p), tol)[2][agent]

    psi = params.psi.copy()
    psi[agent] += delta
    lam = params.lam.copy()
    lam[agent] += delta
    jac = neutral_jacobian(g, h, l, params)
    eig = np.sort(np.linalg.eigvals(jac).real)[::-1]
    gap = float(eig[0] - eig[1]) if eig.size > 1 else np.inf
    return StaticsProbe(
        agent=agent, delta=delta,
        xi_base=xi_of(params),
        xi_psi_up=xi_of(replace(params, psi=psi)),
        xi_lambda_up=xi_of(replace(params, lam=lam)),
        gap=gap,
    )


def consensus_outcome(q) -> str:
    q = np.asarray(q)
    if np.all(q > 0):
        return "D"
    if np.all(q < 0):
        return "C"
    return "mixed"


def epsilon_sweep(instances, eps_grid=(1e-1, 1e-2, 1e-3), n_dirs: int = 5, delta: float = 0.1,
                  seed: int = 0) -> dict:
    """Share of runs whose long-run consensus matches the prediction, per start radius.

    ``instances`` holds (graph, payoff, params) triples with an unstable
    neutral state. Start directions are unit vectors with |xi . d| >= delta,
    drawn once per instance and reused at every radius, so the sweep isolates
    the effect of shrinking the start.
    """
    from .dynamics import EWAModel, integrate_batch

    rng = np.random.Generator(np.random.Philox(seed))
    prepared = []
    for g, payoff, params in instances:
        report = influence_report(g, payoff, params)
        if not (report.unstable and report.all_positive_v1):
            raise PredictionUndefined("every sweep instance needs an unstable neutral state")
        dirs = []
        while len(dirs) < n_dirs:
            d = rng.normal(size=g.n)
            d /= np.linalg.norm(d)
            if abs(report.xi @ d) >= delta:
                dirs.append(d)
        prepared.append((EWAModel.build(g, payoff, params), report, dirs))
    shares = {}
    for eps in eps_grid:
        hits = total = 0
        for model, report, dirs in prepared:
            res = integrate_batch([model] * len(dirs), [eps * d for d in dirs])
            for d, end in zip(dirs, res.final):
                hits += consensus_outcome(end) == predict_coordination(report, eps * d)
                total += 1
        shares[eps] = hits / total
    return shares
