"""Continuous-time EWA attraction dynamics on a network coordination game.

The state is q_i = a_{i,1} - a_{i,0}, the attraction of D minus that of C.
Choice frequencies follow the logit map p_i = 1 / (1 + exp(-lambda_i q_i)).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .coordgame import PayoffMatrix
from .netgraph import Graph

DIVERGENCE_LIMIT = 1e12


class ParameterError(ValueError):
    pass


def logit_response(q, lam):
    """Probability of D; overflow-safe for any finite input."""
    out = expit(np.asarray(lam, dtype=float) * np.asarray(q, dtype=float))
    return out if out.ndim else float(out)


def _centered_response(q, lam):
    """p - 1/2 via tanh: exactly odd in q and accurate near the indifference point."""
    return 0.5 * np.tanh(0.5 * np.asarray(lam, dtype=float) * np.asarray(q, dtype=float))


def _centered_drift(q, s, gs, psi, eta, deg, z, y, x, w):
    # with s = p - 1/2 and gs = G s the two terms swap exactly under q -> -q
    # when z = w and y = x, so symmetric games keep exact odd symmetry in floats
    tau1 = 0.5 * (1.0 + eta) + (1.0 - eta) * s
    tau0 = 0.5 * (1.0 + eta) - (1.0 - eta) * s
    play_d = 0.5 * (w + x) * deg + (w - x) * gs
    play_c = 0.5 * (y + z) * deg + (y - z) * gs
    return -psi * q + (tau1 * play_d - tau0 * play_c)


def _logit_slope(p, lam):
    return lam * p * (1.0 - p)


def saturating_schedule(lam_inf, timescale) -> Callable[[float], np.ndarray]:
    """lambda_i(t) = lambda_i^inf * t / (t + T_i); nondecreasing, unbounded as lambda_inf grows."""
    lam_inf = np.asarray(lam_inf, dtype=float)
    timescale = np.asarray(timescale, dtype=float)

    def schedule(t):
        return lam_inf * t / (t + timescale)
    return schedule


def tabulated_schedule(times, values) -> Callable[[float], np.ndarray]:
    """Piecewise-linear lambda(t) through per-agent tabulated values (rows = times)."""
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if np.any(np.diff(times) <= 0):
        raise ParameterError("schedule times must be strictly increasing")
    if np.any(np.diff(values, axis=0) < 0):
        raise ParameterError("lambda schedule must be nondecreasing in t")

    def schedule(t):
        return np.array([np.interp(t, times, values[:, i]) for i in range(values.shape[1])])
    return schedule


@dataclass
class BehavioralParams:
    psi: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    lambda_schedule: Optional[Callable[[float], np.ndarray]] = None
    gamma: Optional[np.ndarray] = None
    pi_floor: Optional[float] = None
    aspiration: Optional[np.ndarray] = None

    def __post_init__(self):
        self.psi = np.atleast_1d(np.asarray(self.psi, dtype=float))
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        n = max(self.psi.size, self.lam.size, self.eta.size)
        self.psi, self.lam, self.eta = (np.broadcast_to(a, (n,)).copy()
                                        for a in (self.psi, self.lam, self.eta))
        if np.any(self.psi <= 0):
            raise ParameterError("depreciation rates psi must be positive")
        if np.any(self.lam <= 0):
            raise ParameterError("decision accuracies lambda must be positive")
        if np.any((self.eta < 0) | (self.eta > 1)):
            raise ParameterError("forgone-payoff weights eta must lie in [0, 1]")
        if self.gamma is not None:
            self.gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (n,)).copy()
            if self.pi_floor is None:
                raise ParameterError("gamma transform needs pi_floor")
        if self.aspiration is not None:
            self.aspiration = np.broadcast_to(np.asarray(self.aspiration, dtype=float), (n,)).copy()
        if self.lambda_schedule is not None:
            samples = np.array([self.lambda_schedule(t) for t in np.linspace(0.0, 1e3, 64)])
            if np.any(np.diff(samples, axis=0) < -1e-12):
                raise ParameterError("lambda schedule must be nondecreasing in t")

    @classmethod
    def uniform(cls, n: int, psi: float, lam: float, eta: float, **kw) -> "BehavioralParams":
        return cls(np.full(n, psi), np.full(n, lam), np.full(n, eta), **kw)

    @property
    def n(self) -> int:
        return self.psi.size

    def lam_at(self, t: float) -> np.ndarray:
        if self.lambda_schedule is None:
            return self.lam
        return np.asarray(self.lambda_schedule(t), dtype=float)


def transform_payoff(payoff: PayoffMatrix, gamma=None, pi_floor=None, aspiration=None):
    """Per-agent payoff arrays (z, y, x, w), each of shape (n,) or scalar.

    With ``gamma`` every entry becomes (pi - pi_floor) ** gamma_i; with
    ``aspiration`` every entry is shifted down by u_i. Without either the
    PayoffMatrix itself is returned.
    """
    vals = np.array([float(v) for v in payoff.as_tuple()])
    if gamma is None and aspiration is None:
        return payoff
    if gamma is not None:
        if pi_floor is None or not pi_floor < vals.min():
            raise ParameterError(f"pi_floor must lie strictly below every payoff (min {vals.min()})")
        g = np.asarray(gamma, dtype=float)
        entries = [(v - pi_floor) ** g for v in vals]
    else:
        entries = [np.full(np.shape(aspiration), v) for v in vals]
    if aspiration is not None:
        u = np.asarray(aspiration, dtype=float)
        entries = [e - u for e in entries]
    if all(np.ndim(e) == 0 or np.all(e == np.ravel(e)[0]) for e in entries):
        return PayoffMatrix(*(float(np.ravel(e)[0]) for e in entries))
    return tuple(np.asarray(e, dtype=float) for e in entries)


@dataclass
class EWAModel:
    """Pre-resolved arrays for fast drift and Jacobian evaluation."""
    adjacency: np.ndarray
    z: np.ndarray
    y: np.ndarray
    x: np.ndarray
    w: np.ndarray
    params: BehavioralParams
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=float)
        self.degrees = self.adjacency.sum(axis=1)
        n = self.adjacency.shape[0]
        for k in "zyxw":
            setattr(self, k, np.broadcast_to(np.asarray(getattr(self, k), dtype=float), (n,)).copy())
        if self.params.n != n:
            raise ParameterError(f"{self.params.n} parameter entries for {n} agents")

    @classmethod
    def build(cls, g: Graph, payoff: PayoffMatrix, params: BehavioralParams) -> "EWAModel":
        eff = transform_payoff(payoff, params.gamma, params.pi_floor, params.aspiration)
        if isinstance(eff, PayoffMatrix):
            z, y, x, w = (float(v) for v in eff.as_tuple())
        else:
            z, y, x, w = eff
        return cls(g.adjacency, z, y, x, w, params)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def with_params(self, params: BehavioralParams) -> "EWAModel":
        return replace(self, params=params)

    def payoff_scale(self) -> float:
        return float(np.max(np.abs(np.concatenate([self.z, self.y, self.x, self.w]))))

    def magnitude_bound(self) -> np.ndarray:
        """U_i / psi_i: a box containing every fixed point and eventually every trajectory."""
        return 2.0 * self.degrees * self.payoff_scale() / self.params.psi

    def default_dt(self) -> float:
        spread = float(np.max(np.concatenate([self.z, self.y, self.x, self.w])
                           - np.min(np.concatenate([self.z, self.y, self.x, self.w]))))
        lam = self.params.lam if self.params.lambda_schedule is None else self.params.lam_at(1e6)
        rate = self.params.psi + lam * self.degrees * spread / 2.0
        return 0.25 / float(np.max(rate))

    def neighbour_sums(self, p):
        # works row-wise on a (k, n) stack of states as well
        gp = p @ self.adjacency.T
        play_d = self.w * gp + self.x * (self.degrees - gp)
        play_c = self.y * gp + self.z * (self.degrees - gp)
        return play_d, play_c

    def drift(self, q, t: float = 0.0) -> np.ndarray:
        s = _centered_response(q, self.params.lam_at(t))
        return _centered_drift(q, s, s @ self.adjacency.T, self.params.psi, self.params.eta,
                               self.degrees, self.z, self.y, self.x, self.w)

    def drift_full(self, a1, a0, t: float = 0.0):
        lam = self.params.lam_at(t)
        eta = self.params.eta
        p = logit_response(np.asarray(a1) - np.asarray(a0), lam)
        play_d, play_c = self.neighbour_sums(p)
        da1 = -self.params.psi * a1 + (p + eta * (1.0 - p)) * play_d
        da0 = -self.params.psi * a0 + (1.0 - p + eta * p) * play_c
        return da1, da0

    def coupling(self, q, t: float = 0.0) -> np.ndarray:
        """Off-diagonal partials dF_i/dq_j as a dense matrix (zero diagonal)."""
        lam = self.params.lam_at(t)
        eta = self.params.eta
        p = logit_response(q, lam)
        tau1 = p + eta * (1.0 - p)
        tau0 = 1.0 - p + eta * p
        row = tau1 * (self.w - self.x) - tau0 * (self.y - self.z)
        off = self.adjacency * row[:, None] * _logit_slope(p, lam)[None, :]
        np.fill_diagonal(off, 0.0)
        return off

    def jacobian(self, q, t: float = 0.0) -> np.ndarray:
        lam = self.params.lam_at(t)
        p = logit_response(q, lam)
        play_d, play_c = self.neighbour_sums(p)
        diag = -self.params.psi + (1.0 - self.params.eta) * _logit_slope(p, lam) * (play_d + play_c)
        jac = self.coupling(q, t)
        jac[np.diag_indices_from(jac)] = diag
        return jac

    def jacobian_batch(self, qs, t: float = 0.0) -> np.ndarray:
        """Jacobians at each row of a (k, n) stack, shape (k, n, n)."""
        lam = self.params.lam_at(t)
        eta = self.params.eta
        p = logit_response(qs, lam)
        slope = _logit_slope(p, lam)
        play_d, play_c = self.neighbour_sums(p)
        tau1 = p + eta * (1.0 - p)
        tau0 = 1.0 - p + eta * p
        row = tau1 * (self.w - self.x) - tau0 * (self.y - self.z)
        jac = self.adjacency[None, :, :] * row[:, :, None] * slope[:, None, :]
        idx = np.arange(self.n)
        jac[:, idx, idx] = -self.params.psi + (1.0 - eta) * slope * (play_d + play_c)
        return jac


def drift_q(q, g: Graph, payoff: PayoffMatrix, params: BehavioralParams, t: float = 0.0) -> np.ndarray:
    return EWAModel.build(g, payoff, params).drift(np.asarray(q, dtype=float), t)


def drift_full(a1, a0, g: Graph, payoff: PayoffMatrix, params: BehavioralParams, t: float = 0.0):
    return EWAModel.build(g, payoff, params).drift_full(np.asarray(a1, float), np.asarray(a0, float), t)


def cooperativity_check(q, g: Graph, payoff: PayoffMatrix, params: BehavioralParams, t: float = 0.0) -> bool:
    """True iff every off-diagonal partial of the drift is nonnegative at q."""
    off = EWAModel.build(g, payoff, params).coupling(np.asarray(q, dtype=float), t)
    return bool(np.all(off >= 0.0))


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    status: str  # converged | horizon-reached | diverged
    lam_final: np.ndarray = None

    @property
    def final(self) -> np.ndarray:
        return self.q[-1]

    def p(self, params: BehavioralParams) -> np.ndarray:
        return np.array([logit_response(qi, params.lam_at(ti)) for ti, qi in zip(self.t, self.q)])

    def to_csv(self, params: BehavioralParams | None = None) -> str:
        n = self.q.shape[1]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["t"] + [f"q_{i}" for i in range(n)]
        if params is not None:
            header += [f"p_{i}" for i in range(n)]
            ps = self.p(params)
        writer.writerow(header)
        for k, (tk, qk) in enumerate(zip(self.t, self.q)):
            row = [repr(float(tk))] + [repr(float(v)) for v in qk]
            if params is not None:
                row += [repr(float(v)) for v in ps[k]]
            writer.writerow(row)
        return buf.getvalue()


def rk4_step(f, t, q, dt, k1=None):
    if k1 is None:
        k1 = f(q, t)
    k2 = f(q + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(q + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(q + dt * k3, t + dt)
    return q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_model(model: EWAModel, q0, horizon: float = 1e4, dt: float | None = None,
                    conv_tol: float = 1e-9, thin: int = 1, t0: float = 0.0,
                    patience: int = 10) -> Trajectory:
    """Fixed-step RK4 until ||F||_inf <= conv_tol for ``patience`` consecutive steps."""
    if dt is None:
        dt = model.default_dt()
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    q = np.array(q0, dtype=float)
    t = t0
    ts, qs = [t], [q.copy()]
    calm = 0
    status = "horizon-reached"
    fq = model.drift(q, t)
    for k in range(1, int(np.ceil(horizon / dt)) + 1):
        q_new = rk4_step(model.drift, t, q, dt, fq)
        t_new = t0 + k * dt
        if not np.all(np.isfinite(q_new)) or np.max(np.abs(q_new)) > DIVERGENCE_LIMIT:
            status = "diverged"
            break
        q, t = q_new, t_new
        fq = model.drift(q, t)
        if k % thin == 0:
            ts.append(t)
            qs.append(q.copy())
        if np.max(np.abs(fq)) <= conv_tol:
            calm += 1
            if calm >= patience:
                status = "converged"
                break
        else:
            calm = 0
    if ts[-1] != t:
        ts.append(t)
        qs.append(q.copy())
    return Trajectory(np.array(ts), np.array(qs), status, model.params.lam_at(t))


def integrate(q0, g: Graph, payoff: PayoffMatrix, params: BehavioralParams, horizon: float = 1e4,
              dt: float | None = None, conv_tol: float = 1e-9, thin: int = 1) -> Trajectory:
    return integrate_model(EWAModel.build(g, payoff, params), q0, horizon, dt, conv_tol, thin)


@dataclass
class BatchResult:
    final: np.ndarray  # (B, n)
    t_end: np.ndarray
    status: list


def integrate_batch(models: list, q0s, horizon=None, conv_tol: float = 1e-9,
                    courant: float = 0.5, patience: int = 10, max_steps: int = 2_000_000) -> BatchResult:
    """RK4 over many independent models of equal size at once.

    Each model advances on its own clock with step courant / rho(q), where
    rho is the Gershgorin bound of the local Jacobian, so near-saturated
    states take long steps. Rows of the block-diagonal sparse adjacency never
    mix, so a model's result does not depend on which batch it sits in.
    Finished models are dropped from the working set as the batch thins out.
    """
    from scipy import sparse

    b = len(models)
    n = models[0].n
    q_all = np.array(q0s, dtype=float).reshape(b, n)
    t_all = np.zeros(b)
    status = ["horizon-reached"] * b
    if horizon is None:
        horizon = np.array([200.0 / float(np.min(m.params.psi)) for m in models])
    horizon = np.broadcast_to(np.asarray(horizon, dtype=float), (b,))

    ids = np.arange(b)
    steps = 0
    while ids.size and steps < max_steps:
        sub = [models[k] for k in ids]
        adj = sparse.block_diag([sparse.csr_matrix(m.adjacency) for m in sub], format="csr")

        def stack(attr):
            return np.concatenate([np.broadcast_to(getattr(m, attr), (n,)) for m in sub])

        z, y, x, w, deg = (stack(k) for k in ("z", "y", "x", "w", "degrees"))
        psi = np.concatenate([m.params.psi for m in sub])
        lam = np.concatenate([m.params.lam for m in sub])
        eta = np.concatenate([m.params.eta for m in sub])
        hor = horizon[ids]
        nb = ids.size

        def drift(qv):
            s = _centered_response(qv, lam)
            p = 0.5 + s
            gp = adj @ p
            play_d = w * gp + x * (deg - gp)
            play_c = y * gp + z * (deg - gp)
            tau1 = p + eta * (1.0 - p)
            tau0 = 1.0 - p + eta * p
            f = _centered_drift(qv, s, adj @ s, psi, eta, deg, z, y, x, w)
            return f, p, play_d + play_c, tau1, tau0

        def step_size(p, play_sum, tau1, tau0):
            slope = _logit_slope(p, lam)
            coupling = tau1 * (w - x) - tau0 * (y - z)
            rate = psi + (1.0 - eta) * slope * np.abs(play_sum) + coupling * (adj @ slope)
            return courant / rate.reshape(nb, n).max(axis=1)

        q = q_all[ids].reshape(nb * n)
        t = t_all[ids].copy()
        calm = np.zeros(nb, dtype=int)
        active = np.ones(nb, dtype=bool)
        f, p, ps, t1, t0 = drift(q)
        while active.any() and steps < max_steps and active.sum() * 2 > nb:
            steps += 1
            dt = np.minimum(step_size(p, ps, t1, t0), hor - t)
            dt[~active] = 0.0
            dtn = np.repeat(dt, n)
            k2 = drift(q + 0.5 * dtn * f)[0]
            k3 = drift(q + 0.5 * dtn * k2)[0]
            k4 = drift(q + dtn * k3)[0]
            q_new = q + dtn / 6.0 * (f + 2.0 * k2 + 2.0 * k3 + k4)
            block = q_new.reshape(nb, n)
            bad = active & ~(np.isfinite(block).all(axis=1) & (np.abs(block).max(axis=1) <= DIVERGENCE_LIMIT))
            for k in np.flatnonzero(bad):
                status[ids[k]] = "diverged"
            active &= ~bad
            q = np.where(np.repeat(active, n), q_new, q)
            t = t + np.where(active, dt, 0.0)
            f, p, ps, t1, t0 = drift(q)
            small = np.abs(f).reshape(nb, n).max(axis=1) <= conv_tol
            calm = np.where(active & small, calm + 1, np.where(active, 0, calm))
            done = active & (calm >= patience)
            for k in np.flatnonzero(done):
                status[ids[k]] = "converged"
            active &= ~done
            active &= t < hor
        q_all[ids] = q.reshape(nb, n)
        t_all[ids] = t
        ids = ids[active]
    return BatchResult(q_all, t_all, status)
