"""Config-driven experiment assembly shared by the CLI and the acceptance suite."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import constants
from .adversary import rademacher_instance
from .conjugate import phi_from_json
from .controller import AdaptiveController, FixedController, default_a0
from .engine import LossInstance, RegretTrace, config_digest, run
from .instances import (
    planted_instance,
    random_submodular_instance,
    regression_instance,
    set_loss,
    zero_instance,
)
from .lewis_l1 import LewisOracle
from .sparsify import SparsifierOracle
from .submodular import load_hypergraph

FIXED_GRID = tuple(2.0 ** -k for k in range(4, -1, -1))


class ConfigError(KeyError):
    pass


def need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def build_instance(spec: dict, seed: int) -> LossInstance:
    kind = need(spec, "kind")
    if kind == "planted":
        return planted_instance(int(need(spec, "n")), int(need(spec, "T")), int(need(spec, "opt")), seed)[0]
    if kind == "random_submodular":
        return random_submodular_instance(int(need(spec, "n")), int(need(spec, "T")), seed)
    if kind == "zero":
        return zero_instance(int(need(spec, "n")), int(need(spec, "T")))
    if kind == "rademacher":
        inst = rademacher_instance(int(need(spec, "n")), int(need(spec, "T")), seed)
        return LossInstance(inst.losses, set_loss, decision_space=f"subsets({inst.n})")
    if kind == "regression":
        return regression_instance(int(need(spec, "T")), int(need(spec, "d")), seed, float(spec.get("box", 1.0)))
    if kind == "file":
        H = load_hypergraph(need(spec, "path"))
        return LossInstance(list(H.edges), set_loss, decision_space=f"subsets({H.n})")
    raise ConfigError(f"unknown instance kind {kind!r}")


def build_oracle(spec: dict, instance: LossInstance, consts: dict):
    kind = spec["kind"]
    T = instance.T
    if kind == "regression":
        return LewisOracle(int(spec["d"]), T, float(consts.get("c_m", constants.C_m)), float(spec.get("box", 1.0)))
    n = instance.datapoints[0].n
    return SparsifierOracle(n, T, float(consts.get("c_M", constants.C_M)))


def controller_arms(ctl: dict, oracle, T: int, consts: dict) -> list[tuple[str, object]]:
    mode = ctl.get("mode", "adaptive")
    arms = []
    if mode in ("adaptive", "compare"):
        phi = phi_from_json(ctl["phi"]) if "phi" in ctl else oracle.phi
        A0 = float(consts["A0"]) if "A0" in consts else default_a0(phi, T)
        cap = consts.get("eps_cap", getattr(oracle, "eps_cap", None))
        arms.append(("adaptive", AdaptiveController(phi, A0, None if cap is None else float(cap))))
    if mode in ("fixed", "compare"):
        grid = ctl.get("eps", FIXED_GRID)
        grid = [grid] if isinstance(grid, (int, float)) else grid
        for eps in grid:
            arms.append((f"eps{float(eps):g}", FixedController(float(eps))))
    if not arms:
        raise ConfigError(f"unknown controller mode {mode!r}")
    return arms


@dataclass
class ArmRun:
    arm: str
    trace: RegretTrace


def run_one(cfg: dict, arm_index: int, seed: int) -> RegretTrace:
    inst_spec = need(cfg, "instance")
    consts = cfg.get("constants", {})
    instance = build_instance(inst_spec, seed)
    oracle = build_oracle(inst_spec, instance, consts)
    _, controller = controller_arms(cfg.get("controller", {}), oracle, instance.T, consts)[arm_index]
    return run(instance, oracle, controller, seed, digest=config_digest(cfg))


def arm_names(cfg: dict) -> list[str]:
    inst_spec = need(cfg, "instance")
    instance = build_instance(inst_spec, 0)
    oracle = build_oracle(inst_spec, instance, cfg.get("constants", {}))
    return [name for name, _ in controller_arms(cfg.get("controller", {}), oracle, instance.T,
                                                cfg.get("constants", {}))]


def run_seeds(cfg: dict, arm_index: int, seeds: list[int], jobs: int = 1) -> list[RegretTrace]:
    if jobs > 1:
        from joblib import Parallel, delayed

        traces = Parallel(n_jobs=jobs)(delayed(run_one)(cfg, arm_index, s) for s in seeds)
    else:
        traces = [run_one(cfg, arm_index, s) for s in seeds]
    return sorted(traces, key=lambda tr: tr.seed)


def small_loss_table(n: int, T: int, levels, seeds, jobs: int = 1, consts: Optional[dict] = None) -> dict:
    """Mean regret per planted OPT level for the adaptive arm and each fixed eps."""
    consts = consts or {}
    table = {}
    for k in levels:
        cfg = {
            "instance": {"kind": "planted", "n": n, "T": T, "opt": int(k)},
            "controller": {"mode": "compare"},
            "constants": consts,
        }
        names = arm_names(cfg)
        row = {}
        for i, name in enumerate(names):
            traces = run_seeds(cfg, i, list(seeds), jobs)
            regrets = np.array([tr.regret for tr in traces])
            row[name] = {"mean": float(regrets.mean()), "se": float(regrets.std(ddof=1) / math.sqrt(len(regrets))),
                         "opt_T": float(np.mean([tr.opt_T for tr in traces]))}
        table[int(k)] = row
    return table


def loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
