"""Command-line entry point: ``python -m ewanet <subcommand> [--config FILE] --seed S --out-dir DIR``.

Each subcommand reads one JSON document (defaults reproduce the worked
examples when no config is given) and writes CSV artifacts, plus SVG views
where a plot makes sense. The exit code is 0 only when every artifact was
written.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import graph_from_config, params_from_config, payoff_from_config, q0_from_config
from .coordgame import EnumerationCapExceeded, enumerate_limiting_be, enumerate_pure_ne
from .dynamics import integrate
from .equilibria import StartStrategy, find_fixed_points
from .harness import svg
from .harness.montecarlo import ExperimentConfig, records_to_csv, run_battery
from .harness.scenarios import CascadeSpec, cascade_scenario, reinforce_best_scenario, vector_field
from .harness.summaries import (DEFAULT_BINS, DEFAULT_LAMBDA_BANDS, Table, accuracy_summary,
                                consensus_shares, partial_dependence)
from .influence import PredictionUndefined, influence_report, predict_coordination

log = logging.getLogger("ewanet")

EXAMPLE_DYAD = {
    "graph": {"type": "complete", "n": 2},
    "payoff": {"z": 4, "y": -2, "x": 1, "w": 2},
    "params": {"psi": 0.5, "lambda": 1.0, "eta": 1.0},
}
EXAMPLE_STAR = {
    "graph": {"type": "star", "n": 3},
    "payoff": {"h": 2, "l": -1},
    "params": {"psi": [1, 1, 0.5], "lambda": [0.5, 0.5, 1], "eta": 0.5},
    "q0": [0.1, 0.1, -0.18],
}
DEFAULTS = {
    "simulate": {**EXAMPLE_DYAD, "q0": [5.0, 5.0], "horizon": 1e4, "conv_tol": 1e-9, "thin": 10},
    "equilibria": {**EXAMPLE_DYAD, "starts": {}, "tol": 1e-9},
    "influence": EXAMPLE_STAR,
    "montecarlo": {"experiment": {}, "bins": DEFAULT_BINS, "lambda_bands": list(DEFAULT_LAMBDA_BANDS),
                   "svg": True},
    "vectorfield": {**EXAMPLE_DYAD, "box": [-10, 10, -10, 10], "resolution": 41, "svg": True},
    "cascade": {"graph": {"type": "path", "n": 10}, "payoff": {"z": 4, "y": -2, "x": 1, "w": 2},
                "q0": [-1, -1, -1, -1, -1, 1, 1, 1, 1, 1], "spec": {}},
    "reinforce-best": {"graph": {"type": "path", "n": 4}, "payoff": {"z": 4, "y": -2, "x": 1, "w": 2},
                       "gamma_grid": [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0], "pi_floor": -3.0,
                       "psi": 10.0, "lambda": 0.05, "eta": 1.0, "basin_samples": 16},
}


class Artifacts:
    """Collects written paths so the exit code can reflect completeness."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        path = self.out_dir / name
        path.write_text(text)
        self.written.append(path)
        log.info("wrote %s", path)


def _setup(cfg, seed):
    g = graph_from_config(cfg["graph"], seed)
    payoff = payoff_from_config(cfg["payoff"])
    params = params_from_config(cfg["params"], g.n) if "params" in cfg else None
    return g, payoff, params


def cmd_simulate(cfg, seed, out: Artifacts):
    g, payoff, params = _setup(cfg, seed)
    q0 = q0_from_config(cfg["q0"], g.n, seed)
    traj = integrate(q0, g, payoff, params, horizon=cfg.get("horizon", 1e4), dt=cfg.get("dt"),
                     conv_tol=cfg.get("conv_tol", 1e-9), thin=cfg.get("thin", 1))
    out.write("trajectory.csv", traj.to_csv(params))
    print(f"status={traj.status} t_end={traj.t[-1]:.6g} q_final={np.round(traj.final, 6).tolist()}")
    if cfg.get("svg", True):
        series = {f"q_{i}": (traj.t, traj.q[:, i]) for i in range(min(g.n, 6))}
        out.write("trajectory.svg", svg.line_plot(series, "attraction differences", "t", "q"))


def cmd_equilibria(cfg, seed, out: Artifacts):
    g, payoff, params = _setup(cfg, seed)
    strategy = StartStrategy(**{"seed": seed, **cfg.get("starts", {})})
    census = find_fixed_points(g, payoff, params, strategy, cfg.get("tol", 1e-9))
    out.write("census.csv", census.to_csv())
    print(f"fixed points={len(census.records)} stable={len(census.stable)}")
    if payoff.is_coordination():
        try:
            ne = enumerate_pure_ne(g, payoff)
            lbe = enumerate_limiting_be(g, payoff, params.eta.tolist())
        except EnumerationCapExceeded as exc:
            log.warning("skipping profile enumeration: %s", exc)
            return
        table = Table("profiles", ["profile", "nash", "strict_nash", "limiting_be"])
        for prof in sorted(set(ne) | lbe, key=str):
            table.rows.append([str(prof), int(prof in ne), int(ne.get(prof, False)), int(prof in lbe)])
        out.write("profiles.csv", table.to_csv())


def cmd_influence(cfg, seed, out: Artifacts):
    g, payoff, params = _setup(cfg, seed)
    report = influence_report(g, payoff, params)
    out.write("influence.csv", report.to_csv(g, params))
    print(f"kappa1={report.kappa1:.6g} xi={np.round(report.xi, 4).tolist()}")
    if "q0" in cfg:
        q0 = q0_from_config(cfg["q0"], g.n, seed)
        try:
            pred = predict_coordination(report, q0)
        except PredictionUndefined as exc:
            pred = f"undefined: {exc}"
        table = Table("prediction", ["xi_dot_q0", "prediction"],
                      [[float(report.xi @ q0), pred]])
        out.write("prediction.csv", table.to_csv())
        print(f"xi.q0={float(report.xi @ q0):.6g} prediction={pred}")


def cmd_montecarlo(cfg, seed, out: Artifacts):
    exp = ExperimentConfig.from_dict({**cfg.get("experiment", {}), "master_seed": seed})
    records = run_battery(exp, progress=lambda k, n: log.info("%d / %d simulations", k, n))
    out.write("records.csv", records_to_csv(records))
    bins = cfg.get("bins", DEFAULT_BINS)
    acc = accuracy_summary(records, bins)
    shares = consensus_shares(records)
    summary = Table("shares", list(shares), [list(shares.values())])
    out.write("consensus.csv", summary.to_csv())
    out.write("accuracy.csv", acc.by_class.to_csv() + "\n" + acc.by_sigma.to_csv())
    tables = [partial_dependence(records, "cr_centrality", bins),
              partial_dependence(records, "cr_lambda", bins),
              partial_dependence(records, "cr_lambda", bins, cfg.get("lambda_bands", DEFAULT_LAMBDA_BANDS))]
    header, *_ = tables[0].to_csv().splitlines()
    body = [line for t in tables for line in t.to_csv().splitlines()[1:]]
    out.write("partial_dependence.csv", "\n".join([header] + body) + "\n")
    print(f"consensus={shares['consensus_share']:.4f} d_share={shares['d_share']:.4f} "
          f"accuracy D/C={acc.by_class.column('accuracy').round(4).tolist()}")
    if cfg.get("svg", True) and not acc.by_sigma.empty:
        s = acc.by_sigma
        mid = (s.column("sigma_lo") + s.column("sigma_hi")) / 2
        out.write("accuracy.svg", svg.line_plot({"accuracy": (mid, s.column("accuracy"))},
                                                "prediction accuracy", "sigma(q0)", "accuracy", (0.5, 1.0)))
        series = {}
        for t in tables[:2]:
            if not t.empty:
                series[t.rows[0][0]] = (t.column("stat_mean"), t.column("freq_all_d"))
        out.write("partial_dependence.svg", svg.line_plot(series, "all-D frequency", "correlation",
                                                          "frequency", (0.0, 1.0)))


def cmd_vectorfield(cfg, seed, out: Artifacts):
    g, payoff, params = _setup(cfg, seed)
    vf = vector_field(g, payoff, params, tuple(cfg.get("box", (-10, 10, -10, 10))), cfg.get("resolution", 41))
    out.write("vector_field.csv", vf.to_csv())
    table = Table("intersections", ["q_0", "q_1"], [[float(a), float(b)] for a, b in vf.intersections])
    out.write("intersections.csv", table.to_csv())
    print(f"isocline intersections={len(vf.intersections)}")
    if cfg.get("svg", True):
        qx, qy = np.meshgrid(vf.grid_q0, vf.grid_q1)
        pts = np.column_stack([qx.ravel(), qy.ravel()])
        out.write("vector_field.svg", svg.quiver_plot(pts, vf.drift.reshape(-1, 2), "drift field",
                                                      marks=vf.intersections))


def cmd_cascade(cfg, seed, out: Artifacts):
    g = graph_from_config(cfg["graph"], seed)
    payoff = payoff_from_config(cfg["payoff"])
    q0 = q0_from_config(cfg["q0"], g.n, seed)
    tr = cascade_scenario(g, payoff, q0, CascadeSpec.from_dict(cfg.get("spec", {})))
    out.write("cascade.csv", tr.to_csv())
    print(f"cascade={tr.cascade} stages={len(tr.stages)} horizon_exhausted={tr.horizon_exhausted} "
          f"threshold={tr.threshold} d_core={sorted(tr.d_core)}")


def cmd_reinforce_best(cfg, seed, out: Artifacts):
    g = graph_from_config(cfg["graph"], seed)
    payoff = payoff_from_config(cfg["payoff"])
    res = reinforce_best_scenario(g, payoff, cfg["gamma_grid"], pi_floor=cfg.get("pi_floor", -3.0),
                                  psi=cfg.get("psi", 10.0), lam=cfg.get("lambda", 0.05),
                                  eta=cfg.get("eta", 1.0), basin_samples=cfg.get("basin_samples", 16),
                                  seed=seed)
    out.write("reinforce_best.csv", res.to_csv())
    print(f"gamma_hat={'not found in grid' if res.gamma_hat is None else res.gamma_hat}")


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "influence": cmd_influence,
    "montecarlo": cmd_montecarlo,
    "vectorfield": cmd_vectorfield,
    "cascade": cmd_cascade,
    "reinforce-best": cmd_reinforce_best,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ewanet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON document; built-in example when omitted")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", type=Path, default=Path("out"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = dict(DEFAULTS[args.command])
    try:
        if args.config is not None:
            cfg.update(json.loads(args.config.read_text()))
        out = Artifacts(args.out_dir)
        COMMANDS[args.command](cfg, args.seed, out)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
