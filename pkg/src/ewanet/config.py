"""Build graphs, payoffs, parameters and initial states from JSON-style dicts."""
from __future__ import annotations

from importlib import resources

import numpy as np

from .coordgame import PayoffMatrix
from .dynamics import BehavioralParams, saturating_schedule, tabulated_schedule
from .netgraph import (Graph, GraphError, build_graph, complete_graph, erdos_renyi, path_graph,
                       read_edgelist, star_graph)

BUILTIN_GRAPHS = {"bridged_triangles": "bridged_triangles.edgelist"}


def load_builtin_graph(name: str) -> Graph:
    try:
        fname = BUILTIN_GRAPHS[name]
    except KeyError:
        raise GraphError(f"unknown builtin graph {name!r}; known: {sorted(BUILTIN_GRAPHS)}") from None
    return read_edgelist(resources.files("ewanet.data").joinpath(fname).read_text())


def graph_from_config(cfg: dict, seed: int = 0) -> Graph:
    """Accepts {"edges": [[u, v], ...], "n": k}, {"builtin": name}, {"edgelist_file": path},
    or {"type": "complete" | "path" | "star" | "erdos_renyi", "n": k, "p": ...}."""
    if "edges" in cfg:
        edges = [tuple(e) for e in cfg["edges"]]
        n = cfg.get("n", 1 + max((max(e) for e in edges), default=0))
        return build_graph(n, edges)
    if "builtin" in cfg:
        return load_builtin_graph(cfg["builtin"])
    if "edgelist_file" in cfg:
        with open(cfg["edgelist_file"]) as fh:
            return read_edgelist(fh.read())
    kind = cfg.get("type")
    n = cfg.get("n")
    if kind == "complete":
        return complete_graph(n)
    if kind == "path":
        return path_graph(n)
    if kind == "star":
        return star_graph(n)
    if kind == "erdos_renyi":
        return erdos_renyi(n, cfg["p"], seed=cfg.get("seed", seed),
                           require_connected=cfg.get("require_connected", True),
                           max_redraws=cfg.get("max_redraws", 1000))
    raise GraphError(f"cannot build a graph from config keys {sorted(cfg)}")


def _vec(v, n):
    return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()


def params_from_config(cfg: dict, n: int) -> BehavioralParams:
    """Keys psi, lambda, eta (scalar or per-agent list); optional gamma, pi_floor,
    aspiration and lambda_schedule ({"type": "saturating", "lam_inf", "timescale"}
    or {"type": "tabulated", "times", "values"})."""
    schedule = None
    spec = cfg.get("lambda_schedule")
    if spec is not None:
        if spec["type"] == "saturating":
            schedule = saturating_schedule(_vec(spec["lam_inf"], n), _vec(spec["timescale"], n))
        elif spec["type"] == "tabulated":
            schedule = tabulated_schedule(spec["times"], spec["values"])
        else:
            raise ValueError(f"unknown lambda schedule type {spec['type']!r}")
    opt = {}
    if "gamma" in cfg:
        opt["gamma"] = _vec(cfg["gamma"], n)
        opt["pi_floor"] = cfg.get("pi_floor")
    if "aspiration" in cfg:
        opt["aspiration"] = _vec(cfg["aspiration"], n)
    return BehavioralParams(_vec(cfg["psi"], n), _vec(cfg["lambda"], n), _vec(cfg.get("eta", 1.0), n),
                            lambda_schedule=schedule, **opt)


def q0_from_config(cfg, n: int, seed: int = 0) -> np.ndarray:
    """An explicit list, or {"sigma_q": s} for i.i.d. Normal(0, s) draws seeded by ``seed``."""
    if isinstance(cfg, dict):
        rng = np.random.Generator(np.random.Philox(cfg.get("seed", seed)))
        return rng.normal(0.0, cfg["sigma_q"], size=n)
    q0 = np.asarray(cfg, dtype=float)
    if q0.shape != (n,):
        raise ValueError(f"q0 needs {n} entries, got shape {q0.shape}")
    return q0


def payoff_from_config(cfg: dict) -> PayoffMatrix:
    return PayoffMatrix.from_config(cfg)
