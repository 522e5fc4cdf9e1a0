"""Command-line experiment runner.

    smallloss {conjugate,simulate,sensitivity,lowerbound,calibrate} --config PATH --seed N --out DIR [--jobs K]

Exit codes: 0 success, 1 usage error, 2 audit failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import constants
from .adversary import ConstantLearner, mistake_tree_run, rademacher_instance, theta_masks
from .calibration import calibrate_c_M, calibrate_c_m
from .conjugate import DomainError, phi_from_json, phi_star
from .controller import AdaptiveController, default_a0
from .engine import BatchToOnlineLearner, config_digest, random_order_stream
from .experiments import ConfigError, arm_names, need, run_seeds
from .lewis_l1 import l1_sensitivity_audit
from .sparsify import SparsifierOracle, sample_size_M, sensitivity_audit
from .submodular import load_hypergraph

log = logging.getLogger("smallloss")

OK, USAGE, AUDIT = 0, 1, 2


class UsageError(Exception):
    pass


class AuditFailure(Exception):
    pass


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file {path} not found")
    if p.suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # Python < 3.11
            import tomli as tomllib
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    with open(p) as fh:
        return json.load(fh)


def fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def experiment_dir(out: Path, name: str) -> Path:
    d = out / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_conjugate(cfg: dict, seed: int, out: Path, jobs: int) -> int:
    phi = phi_from_json(need(cfg, "phi"))
    if "u" in cfg:
        us = [float(u) for u in cfg["u"]]
    else:
        lo, hi = float(need(cfg, "u_min")), float(need(cfg, "u_max"))
        if not (0 < lo <= hi):
            raise UsageError("u range must satisfy 0 < u_min <= u_max")
        us = np.geomspace(lo, hi, int(cfg.get("points", 33))).tolist()
    if any(u <= 0 for u in us):
        raise UsageError("u values must be positive")
    rows = []
    for u in us:
        pt = phi_star(phi, u)
        rows.append((pt.u, pt.eps_min, pt.phi_star))
    d = experiment_dir(out, cfg.get("experiment", "conjugate"))
    write_csv(d / f"{seed}.csv", ["u", "eps_min", "phi_star"], rows)
    write_json(d / "summary.json", {"seed": seed, "points": len(rows), "phi": phi.to_json(),
                                    "config_digest": config_digest(cfg)})
    return OK


def _trace_audit(trace) -> list[str]:
    problems = []
    opts = trace.column("opt_t")
    if np.any(np.diff(opts) < -1e-9):
        problems.append(f"seed {trace.seed}: OPT_t decreased")
    losses = trace.column("loss")
    if np.any((losses < -1e-12) | (losses > 1 + 1e-12)):
        problems.append(f"seed {trace.seed}: loss outside [0, 1]")
    if abs(losses.sum() - trace.cum_loss) > 1e-9 * max(1.0, trace.cum_loss):
        problems.append(f"seed {trace.seed}: cumulative loss does not match rows")
    return problems


def cmd_simulate(cfg: dict, seed: int, out: Path, jobs: int) -> int:
    name = cfg.get("experiment", "simulate")
    num = int(cfg.get("num_seeds", 1))
    seeds = [int(s) for s in cfg["seeds"]] if "seeds" in cfg else [seed + k for k in range(num)]
    names = arm_names(cfg)
    comparison = {}
    problems = []
    for i, arm in enumerate(names):
        traces = run_seeds(cfg, i, seeds, jobs)
        d = experiment_dir(out, name if len(names) == 1 else f"{name}-{arm}")
        for tr in traces:
            (d / f"{tr.seed}.csv").write_text(tr.to_csv())
            problems += _trace_audit(tr)
        regrets = [tr.regret for tr in traces]
        summary = {"root_seed": seed, "arm": arm, "runs": [tr.summary() for tr in traces],
                   "mean_regret": float(np.mean(regrets)), "config_digest": config_digest(cfg)}
        write_json(d / "summary.json", summary)
        comparison[arm] = summary["mean_regret"]
    if len(names) > 1:
        write_json(out / f"{name}-comparison.json", {"root_seed": seed, "mean_regret": comparison,
                                                     "config_digest": config_digest(cfg)})
    for p in problems:
        log.error(p)
    return AUDIT if problems else OK


def cmd_sensitivity(cfg: dict, seed: int, out: Path, jobs: int) -> int:
    name = cfg.get("experiment", "sensitivity")
    inst = need(cfg, "instance")
    kind = need(inst, "kind")
    eps = float(cfg.get("eps", 0.5))
    d = experiment_dir(out, name)
    rng = np.random.default_rng(seed)
    if kind in ("hypergraph", "file"):
        if kind == "file":
            H = load_hypergraph(need(inst, "path"))
        else:
            from .instances import random_hypergraph

            H = random_hypergraph(int(need(inst, "n")), int(need(inst, "edges")), rng)
        delta = float(cfg.get("delta", 1.0 / max(len(H.edges), 2)))
        M = sample_size_M(H.n, eps, delta, float(cfg.get("constants", {}).get("c_M", constants.C_M)))
        rep = sensitivity_audit(H, eps, M)
        rows = [(r["edge"], float(r["bound"]), float(r["bound_tight"]), float(r["exact_coordinate_sum"]),
                 float(r["score_shift"]), float(r["own_score"])) for r in rep.rows()]
        write_csv(d / f"{seed}.csv", ["edge", "bound", "bound_tight", "exact_coordinate_sum", "score_shift",
                                      "own_score"], rows)
        ok = rep.average <= rep.cap and bool(np.all(rep.score_shift <= rep.own_score + 1e-12))
        summary = {"average": rep.average, "cap": rep.cap, "M": M, "eps": eps, "edges": len(H.edges)}
    elif kind == "matrix":
        if "path" in inst:
            A = np.loadtxt(inst["path"], delimiter=",", ndmin=2)
        else:
            A = rng.standard_normal((int(need(inst, "t")), int(need(inst, "d"))))
        rep = l1_sensitivity_audit(A, eps=eps)
        rows = [(i, float(v), float(w)) for i, (v, w) in enumerate(zip(rep.per_row, rep.identity))]
        write_csv(d / f"{seed}.csv", ["row", "p_change", "two_w_over_r"], rows)
        t = A.shape[0]
        ok = bool(np.all(np.abs(rep.per_row - rep.identity) <= 1e-6)) and rep.average <= 2 / t + 1e-9 and rep.monotone
        summary = {"average": rep.average, "cap": 2 / t, "tv_bound_average": rep.tv_bound_average,
                   "monotone": rep.monotone, "eps": eps}
    else:
        raise ConfigError(f"unknown sensitivity instance kind {kind!r}")
    summary.update(seed=seed, passed=ok, config_digest=config_digest(cfg))
    write_json(d / "summary.json", summary)
    return OK if ok else AUDIT


def cmd_lowerbound(cfg: dict, seed: int, out: Path, jobs: int) -> int:
    kind = need(cfg, "kind")
    name = cfg.get("experiment", kind)
    d = experiment_dir(out, name)
    if kind == "rademacher":
        n, T = int(need(cfg, "n")), int(need(cfg, "T"))
        draws = int(cfg.get("draws", 1))
        sim = {"instance": {"kind": "rademacher", "n": n, "T": T}, "controller": {"mode": "adaptive"},
               "constants": cfg.get("constants", {})}
        traces = run_seeds(sim, 0, [seed + k for k in range(draws)], jobs)
        for tr in traces:
            (d / f"{tr.seed}.csv").write_text(tr.to_csv())
        mean = float(np.mean([tr.regret for tr in traces]))
        floor = float(cfg.get("floor", 0.0)) * math.sqrt(n * T)
        summary = {"root_seed": seed, "runs": [tr.summary() for tr in traces], "mean_regret": mean,
                   "scaled": mean / math.sqrt(n * T), "floor": floor, "config_digest": config_digest(cfg)}
        write_json(d / "summary.json", summary)
        return OK if mean >= floor else AUDIT
    if kind == "mistake_tree":
        T = int(need(cfg, "T"))
        learner_kind = cfg.get("learner", "engine")
        if learner_kind == "engine":
            oracle = SparsifierOracle(T + 2, T, float(cfg.get("constants", {}).get("c_M", constants.C_M)),
                                      masks=theta_masks(T))
            ctl = AdaptiveController(oracle.phi, default_a0(oracle.phi, T), oracle.eps_cap)
            learner = BatchToOnlineLearner(oracle, ctl, seed)
        elif learner_kind in ("zero", "one"):
            learner = ConstantLearner(T, 1 if learner_kind == "one" else 0)
        else:
            raise ConfigError(f"unknown learner {learner_kind!r}")
        res = mistake_tree_run(learner, T)
        res.trace.seed = seed
        res.trace.config_digest = config_digest(cfg)
        (d / f"{seed}.csv").write_text(res.trace.to_csv())
        summary = res.trace.summary()
        summary.update(witness=res.witness, witness_loss=res.witness_loss, enumerated_opt=res.enumerated_opt)
        write_json(d / "summary.json", summary)
        ok = res.trace.cum_loss == T and res.witness_loss == 0 and res.enumerated_opt in (None, 0.0)
        return OK if ok else AUDIT
    raise ConfigError(f"unknown lower-bound kind {kind!r}")


def cmd_calibrate(cfg: dict, seed: int, out: Path, jobs: int) -> int:
    target = need(cfg, "target")
    kwargs = {k: cfg[k] for k in ("threshold", "trials") if k in cfg}
    if target == "c_M":
        rep = calibrate_c_M(seed=seed, **kwargs)
        shipped = constants.C_M
    elif target == "c_m":
        rep = calibrate_c_m(seed=seed, **kwargs)
        shipped = constants.C_m
    else:
        raise ConfigError(f"unknown calibration target {target!r}")
    d = experiment_dir(out, cfg.get("experiment", f"calibrate-{target}"))
    rows = [(float(c), float(r)) for c, r in rep.rates.items()]
    write_csv(d / f"{seed}.csv", ["candidate", "success_rate"], rows)
    summary = rep.to_json()
    summary.update(shipped=shipped, matches_shipped=rep.constant == shipped, config_digest=config_digest(cfg))
    write_json(d / "summary.json", summary)
    print(json.dumps({"target": target, "constant": rep.constant, "shipped": shipped}))
    return OK


COMMANDS = {
    "conjugate": cmd_conjugate,
    "simulate": cmd_simulate,
    "sensitivity": cmd_sensitivity,
    "lowerbound": cmd_lowerbound,
    "calibrate": cmd_calibrate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smallloss", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed")
        if seed is None:
            raise UsageError("a root seed is required (--seed or `seed` in the config)")
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return COMMANDS[args.command](cfg, int(seed), Path(args.out), args.jobs)
    except (UsageError, ConfigError, DomainError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE
    except AuditFailure as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return AUDIT
