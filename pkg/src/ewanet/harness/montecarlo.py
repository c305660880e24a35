"""Seeded Monte Carlo battery on Erdos-Renyi networks with symmetric payoffs."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..coordgame import PayoffMatrix
from ..dynamics import BehavioralParams, EWAModel, integrate_batch
from ..influence import influence_report, predict_coordination
from ..netgraph import eigenvector_centrality, erdos_renyi

CONSENSUS_MARGIN = 1e-6
PAYOFF_POOL = ((2.0, -1.0), (1.0, -2.0))


@dataclass
class ExperimentConfig:
    n_sims: int = 2000
    n: int = 100
    p: float = 0.1
    require_connected: bool = True
    payoff_pool: tuple = PAYOFF_POOL
    psi_range: tuple = (0.1, 10.0)
    lambda_range: tuple = (0.1, 10.0)
    eta_range: tuple = (0.0, 1.0)
    sigma_q_range: tuple = (0.01, 1.0)
    master_seed: int = 0
    conv_tol: float = 1e-9
    courant: float = 0.5
    batch_size: int = 200

    def __post_init__(self):
        if self.psi_range[0] <= 0 or self.lambda_range[0] <= 0:
            raise ValueError("psi and lambda ranges must be positive")
        if not 0 <= self.eta_range[0] <= self.eta_range[1] <= 1:
            raise ValueError("eta range must sit inside [0, 1]")
        for lo, hi in (self.psi_range, self.lambda_range, self.sigma_q_range):
            if lo > hi:
                raise ValueError(f"range ({lo}, {hi}) is not ordered")

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        cfg = {k: tuple(tuple(x) if isinstance(x, list) else x for x in v) if isinstance(v, list) else v
               for k, v in cfg.items()}
        return cls(**cfg)


@dataclass
class SimRecord:
    index: int
    seed: int
    h: float
    l: float
    kappa1: float
    all_positive_v1: bool
    prediction: str  # D | C | indeterminate | undefined
    outcome: str  # all-D | all-C | mixed | nonconverged
    sigma_q0: float
    cr_q0_centrality: float
    cr_q0_lambda: float
    mu_lambda: float
    t_end: float


def sim_seed(master: int, index: int) -> int:
    """64-bit per-simulation seed derived from (master, index)."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


def _uniform_bounds(rng, lo, hi):
    a, b = rng.uniform(lo, hi, size=2)
    return min(a, b), max(a, b)


@dataclass
class _Draw:
    record: dict
    model: EWAModel
    q0: np.ndarray


def draw_simulation(config: ExperimentConfig, index: int) -> _Draw:
    seed = sim_seed(config.master_seed, index)
    rng = np.random.Generator(np.random.Philox(seed))
    g = erdos_renyi(config.n, config.p, seed=int(rng.integers(2 ** 63)),
                    require_connected=config.require_connected)
    h, l = config.payoff_pool[int(rng.integers(len(config.payoff_pool)))]
    n = config.n
    psi = rng.uniform(*_uniform_bounds(rng, *config.psi_range), size=n)
    lam = rng.uniform(*_uniform_bounds(rng, *config.lambda_range), size=n)
    eta = rng.uniform(*_uniform_bounds(rng, *config.eta_range), size=n)
    sigma_q = rng.uniform(*config.sigma_q_range)
    q0 = rng.normal(0.0, sigma_q, size=n)
    params = BehavioralParams(psi, lam, eta)
    payoff = PayoffMatrix.symmetric(h, l)
    report = influence_report(g, payoff, params, spectrum_cap=0)
    if report.unstable and report.all_positive_v1:
        prediction = predict_coordination(report, q0)
    else:
        prediction = "undefined"
    centrality, _ = eigenvector_centrality(g)
    record = dict(
        index=index, seed=seed, h=h, l=l, kappa1=report.kappa1,
        all_positive_v1=report.all_positive_v1, prediction=prediction,
        sigma_q0=float(np.std(q0)),
        cr_q0_centrality=float(np.corrcoef(q0, centrality)[0, 1]),
        cr_q0_lambda=float(np.corrcoef(q0, lam)[0, 1]),
        mu_lambda=float(lam.mean()),
    )
    return _Draw(record, EWAModel.build(g, payoff, params), q0)


def classify_outcome(q_final, status: str) -> str:
    if status != "converged":
        return "nonconverged"
    if np.all(q_final > CONSENSUS_MARGIN):
        return "all-D"
    if np.all(q_final < -CONSENSUS_MARGIN):
        return "all-C"
    return "mixed"


def run_battery(config: ExperimentConfig, indices=None, progress=None) -> list:
    """One SimRecord per simulation index; each is reproducible from its own seed."""
    indices = list(range(config.n_sims)) if indices is None else list(indices)
    records = []
    for start in range(0, len(indices), config.batch_size):
        chunk = indices[start:start + config.batch_size]
        draws = [draw_simulation(config, i) for i in chunk]
        result = integrate_batch([d.model for d in draws], [d.q0 for d in draws],
                                 conv_tol=config.conv_tol, courant=config.courant)
        for k, d in enumerate(draws):
            rec = SimRecord(**d.record, outcome=classify_outcome(result.final[k], result.status[k]),
                            t_end=float(result.t_end[k]))
            records.append(rec)
        if progress is not None:
            progress(len(records), len(indices))
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(SimRecord)]
    writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(r).items()})
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    out = []
    types = {f.name: f.type for f in fields(SimRecord)}
    for row in csv.DictReader(io.StringIO(text)):
        vals = {}
        for k, v in row.items():
            t = types[k]
            if t == "int":
                vals[k] = int(v)
            elif t == "float":
                vals[k] = float(v)
            elif t == "bool":
                vals[k] = v == "True"
            else:
                vals[k] = v
        out.append(SimRecord(**vals))
    return out
