"""Command line: ``approachlab simulate|verify|demo``.

Exit codes: 0 success, 2 the run finished but a bound was violated, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .approach import (
    ApproachConfig,
    box_transform,
    potential_linf_bound,
    weak_approach_demo,
)
from .calibration import (
    eps_calibration_score_1d,
    eps_score_bound,
    eps_score_from_stats,
    frequency_forecaster_vs_oakes_dawid,
    full_mask,
    grid_score_bound,
    make_regular_grid,
    neighbor_mask,
    run_foster,
    score_from_stats,
)
from .engine import VectorGame, coin_game
from .geometry import Ball, Box, HalfspaceIntersection, distance_linf, negative_orthant
from .kernels import (
    ALGORITHMS,
    blackwell_episode_kernel,
    calib_episode_kernel,
    checkpoint_array,
    episode_uniforms,
    potential_episode_kernel,
    regret_episode_kernel,
)
from .regret import SwapFamily
from .suites import SUITES, WEAK_NATURES, run_suite

# ---------------------------------------------------------------------------
# configuration

REGRET_SUITES = {"regret-matching": "regret_matching", "exp-weights": "exp_weights",
                 "internal": "internal", "phi": "phi", "ogd": "ogd"}
SIM_SUITES = tuple(REGRET_SUITES) + ("blackwell", "potential", "calibration", "lln")

CONFIG_KEYS = {"suite", "game", "nature", "target", "grid", "family", "n", "trials", "seed",
               "out", "restrict_to_hull"}
GAME_KEYS = {"payoffs", "path"}
NATURE_KEYS = {"type", "probs"}
TARGET_KEYS = {"type", "lower", "upper", "center", "radius", "normals", "offsets", "witness"}
GRID_KEYS = {"outcomes", "eps", "mode"}

DEFAULT_RHO = [[0.9, 0.1, 0.4, 0.6], [0.2, 0.8, 0.5, 0.3], [0.5, 0.5, 0.9, 0.0]]
DEFAULT_VECTOR_GAME = [[[1.0, 0.0], [0.0, 1.0]], [[-1.0, 0.5], [0.5, -1.0]]]

SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["suite", "metric", "n", "trials", "seed", "final_metric", "bound", "passed",
                 "csv"],
    "properties": {
        "suite": {"type": "string"},
        "metric": {"type": "string"},
        "n": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "final_metric": {"type": ["number", "null"]},
        "final_std": {"type": ["number", "null"]},
        "bound": {"type": ["number", "null"]},
        "passed": {"type": "boolean"},
        "csv": {"type": "string"},
        "game_hash": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}

VERIFY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["suite", "passed", "criteria"],
    "properties": {
        "suite": {"type": "string"},
        "passed": {"type": "boolean"},
        "criteria": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["number", "name", "passed", "checks", "seconds", "error"],
                "properties": {
                    "number": {"type": "integer"},
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "seconds": {"type": "number"},
                    "error": {"type": ["string", "null"]},
                    "checks": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["label", "value", "bound", "ok"],
                            "properties": {"label": {"type": "string"},
                                           "value": {"type": "number"},
                                           "bound": {"type": "number"},
                                           "ok": {"type": "boolean"}},
                            "additionalProperties": False,
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _int(value, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}")
    return value


def load_config(path: Optional[str]) -> dict:
    if path is None:
        raise ConfigError("simulate needs --config PATH")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(cfg, base=Path(path).parent)


def validate_config(cfg: dict, base: Path = Path(".")) -> dict:
    """Check every key and fill defaults; raises :class:`ConfigError`."""
    _reject_unknown(cfg, CONFIG_KEYS, "config")
    suite = cfg.get("suite")
    if suite not in SIM_SUITES:
        raise ConfigError(f"suite must be one of {', '.join(SIM_SUITES)}")
    out = {"suite": suite,
           "n": _int(cfg.get("n", 1000), "n", 0),
           "trials": _int(cfg.get("trials", 20), "trials", 1),
           "seed": _int(cfg.get("seed", 0), "seed", 0),
           "out": str(cfg.get("out", "approachlab-out")),
           "restrict_to_hull": bool(cfg.get("restrict_to_hull", False))}

    game = cfg.get("game", {})
    _reject_unknown(game, GAME_KEYS, "game")
    if "payoffs" in game and "path" in game:
        raise ConfigError("game takes either payoffs or path, not both")
    if "path" in game:
        p = Path(game["path"])
        p = p if p.is_absolute() else base / p
        try:
            payoffs = np.load(p) if p.suffix == ".npy" else np.asarray(json.loads(p.read_text()))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read game file {p}: {exc}") from exc
    elif "payoffs" in game:
        payoffs = game["payoffs"]
    elif suite in REGRET_SUITES:
        payoffs = DEFAULT_RHO
    elif suite == "lln":
        payoffs = coin_game().payoffs
    else:
        payoffs = DEFAULT_VECTOR_GAME
    try:
        payoffs = np.asarray(payoffs, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError("payoffs must be a numeric array") from exc
    if not np.all(np.isfinite(payoffs)):
        raise ConfigError("payoffs must be finite")
    if suite in REGRET_SUITES and payoffs.ndim != 2:
        raise ConfigError("regret suites need a 2-d payoff matrix rho[a, b]")
    if suite in ("blackwell", "potential", "lln") and payoffs.ndim != 3:
        raise ConfigError("vector suites need a 3-d payoff array g[a, b, k]")
    out["payoffs"] = payoffs

    nature = cfg.get("nature", {})
    _reject_unknown(nature, NATURE_KEYS, "nature")
    ntype = nature.get("type", "adaptive")
    if ntype not in ("iid", "adaptive"):
        raise ConfigError("nature.type must be iid or adaptive")
    out["nature"] = ntype
    out["probs"] = nature.get("probs")

    if suite in ("blackwell", "potential"):
        out["target"] = _parse_target(cfg.get("target"), payoffs.shape[2], suite)
    elif "target" in cfg:
        raise ConfigError(f"suite {suite} takes no target")

    if suite == "calibration":
        grid = cfg.get("grid", {})
        _reject_unknown(grid, GRID_KEYS, "grid")
        omega = _int(grid.get("outcomes", 2), "grid.outcomes", 2)
        eps = float(grid.get("eps", 0.1))
        if not 0 < eps <= 1:
            raise ConfigError("grid.eps must lie in (0, 1]")
        mode = grid.get("mode", "grid")
        if mode not in ("grid", "eps"):
            raise ConfigError("grid.mode must be grid or eps")
        out.update(outcomes=omega, eps=eps, mode=mode)
    elif "grid" in cfg:
        raise ConfigError(f"suite {suite} takes no grid")

    if "family" in cfg:
        if suite != "phi":
            raise ConfigError("family applies to the phi suite only")
        if cfg["family"] not in ("internal", "swap", "external"):
            raise ConfigError("family must be internal, swap or external")
    out["family"] = cfg.get("family", "internal")
    if out["probs"] is not None:
        B = out["outcomes"] if suite == "calibration" else payoffs.shape[1]
        probs = np.asarray(out["probs"], dtype=float)
        if probs.shape != (B,) or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0,
                                                                         abs_tol=1e-9):
            raise ConfigError(f"nature.probs must be a distribution over {B} actions")
        out["probs"] = probs
    return out


def _parse_target(t, d: int, suite: str):
    if t is None:
        # approachable for the default game (play each row half the time)
        return Box(-0.5 * np.ones(d), 0.5 * np.ones(d))
    _reject_unknown(t, TARGET_KEYS, "target")
    kind = t.get("type")
    try:
        if kind == "box":
            target = Box(t["lower"], t["upper"])
        elif kind == "orthant":
            target = negative_orthant(d)
        elif kind == "ball":
            target = Ball(t["center"], t["radius"])
        elif kind == "halfspaces":
            target = HalfspaceIntersection(t["normals"], t["offsets"], t["witness"])
        else:
            raise ConfigError("target.type must be box, orthant, ball or halfspaces")
    except KeyError as exc:
        raise ConfigError(f"target is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid target: {exc}") from exc
    if target.dim != d:
        raise ConfigError("target dimension differs from the payoff dimension")
    if suite == "potential" and not isinstance(target, Box):
        raise ConfigError("the potential suite needs a bounded box target")
    return target


# ---------------------------------------------------------------------------
# simulate


def _simulate_series(cfg: dict):
    """Per-trial metric at every stage, the bound per stage and the metric name."""
    n, trials, seed = cfg["n"], cfg["trials"], cfg["seed"]
    suite = cfg["suite"]
    stages = np.arange(1, n + 1)
    nat = 1 if cfg["nature"] == "adaptive" else 0
    rows = np.zeros((trials, n))
    if n == 0:
        return rows, np.zeros(0), suite
    cp = checkpoint_array(stages)
    P = cfg["payoffs"]
    if suite in REGRET_SUITES:
        A, B = P.shape
        probs = cfg["probs"] if cfg["probs"] is not None else np.full(B, 1.0 / B)
        fam = {"internal": SwapFamily.internal, "swap": SwapFamily.swap,
               "external": SwapFamily.external}[cfg["family"]](A)
        algo = ALGORITHMS[REGRET_SUITES[suite]]
        for i in range(trials):
            r, R, phi = regret_episode_kernel(P, algo, nat, probs, fam.maps,
                                              episode_uniforms(seed + i, n), cp)
            if suite == "exp-weights":
                rows[i] = np.maximum(r, 0).max(axis=1) / stages
            elif suite == "internal":
                rows[i] = np.linalg.norm(np.maximum(R, 0).reshape(n, -1), axis=1) / stages
            elif suite == "phi":
                rows[i] = np.linalg.norm(np.maximum(phi, 0), axis=1) / stages
            else:
                rows[i] = np.linalg.norm(np.maximum(r, 0), axis=1) / stages
        if suite == "exp-weights":
            bound = 2.0 * np.sqrt(math.log(max(A, 2)) / stages)
            return rows, bound, "linf_positive_external_regret"
        if suite == "phi":
            return rows, np.sqrt(fam.moved() / stages), "l2_positive_phi_regret"
        name = "l2_positive_internal_regret" if suite == "internal" else "l2_positive_external_regret"
        return rows, np.sqrt(A / stages), name
    if suite == "lln":
        # The player's action is fixed to 0 (Nature alone moves), drawing one
        # uniform per stage exactly as the engine does in expected mode.
        g = VectorGame(P)
        probs = cfg["probs"] if cfg["probs"] is not None else np.full(g.n_nature,
                                                                        1.0 / g.n_nature)
        c = np.cumsum(probs)
        for i in range(trials):
            u = np.random.default_rng(seed + i).random(n)
            b = np.minimum(np.searchsorted(c, u * c[-1], side="right"), g.n_nature - 1)
            s = np.cumsum(g.payoffs[0, b], axis=0)
            rows[i] = (s ** 2).sum(axis=1) / stages ** 2
        return rows, g.norm_inf() ** 2 / stages, "squared_norm_of_average"
    if suite in ("blackwell", "potential"):
        g = VectorGame(P)
        B = g.n_nature
        probs = cfg["probs"] if cfg["probs"] is not None else np.full(B, 1.0 / B)
        target = cfg["target"]
        if suite == "blackwell":
            acfg = ApproachConfig(g, target, restrict_to_hull=cfg["restrict_to_hull"])
            enc = acfg.working_target.encode()
            for i in range(trials):
                avg = blackwell_episode_kernel(P, *enc, acfg.fallback, nat, probs, False,
                                               episode_uniforms(seed + i, n), cp)
                rows[i] = [target.project(z)[1] for z in avg]
            return rows, np.sqrt(acfg.kappa() / stages), "distance_to_target"
        H = box_transform(g, target)
        for i in range(trials):
            avg = potential_episode_kernel(P, H, nat, probs, episode_uniforms(seed + i, n), cp)
            rows[i] = [distance_linf(target, z) for z in avg]
        return rows, potential_linf_bound(g.dim, stages), "linf_distance_to_box"
    # calibration
    omega, eps = cfg["outcomes"], cfg["eps"]
    grid = make_regular_grid(omega - 1, eps)
    probs = cfg["probs"] if cfg["probs"] is not None else np.full(omega, 1.0 / omega)
    mask = neighbor_mask(grid) if cfg["mode"] == "eps" else full_mask(len(grid))
    for i in range(trials):
        N, S = calib_episode_kernel(grid.points, np.zeros(len(grid)), mask, omega, nat, probs,
                                    episode_uniforms(seed + i, n), cp)
        if cfg["mode"] == "eps":
            rows[i] = [eps_score_from_stats(N[c], S[c], c + 1, grid, eps) for c in range(n)]
        else:
            rows[i] = [score_from_stats(N[c], S[c], c + 1, grid, squared=True)
                       for c in range(n)]
    if cfg["mode"] == "eps":
        return rows, eps_score_bound(stages), "eps_calibration_score"
    return rows, grid_score_bound(len(grid), stages), "squared_calibration_score"


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_simulate(cfg: dict, out_dir: Path) -> int:
    rows, bound, metric = _simulate_series(cfg)
    n, trials = cfg["n"], cfg["trials"]
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg['suite']}_series.csv"
    mean = rows.mean(axis=0) if n else np.zeros(0)
    std = rows.std(axis=0, ddof=1) if (n and trials > 1) else np.zeros(n)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "mean", "std", "max", "bound"])
        for k in range(n):
            w.writerow([k + 1, _fmt(mean[k]), _fmt(std[k]), _fmt(rows[:, k].max()),
                        _fmt(bound[k])])
    passed = bool(n == 0 or mean[-1] <= bound[-1])
    summary = {
        "suite": cfg["suite"], "metric": metric, "n": n, "trials": trials, "seed": cfg["seed"],
        "final_metric": float(mean[-1]) if n else None,
        "final_std": float(std[-1]) if n else None,
        "bound": float(bound[-1]) if n else None,
        "passed": passed, "csv": csv_path.name,
        "game_hash": VectorGame(cfg["payoffs"][:, :, None] if cfg["payoffs"].ndim == 2
                                else cfg["payoffs"]).fingerprint(),
    }
    (out_dir / f"{cfg['suite']}_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# verify and demo


def cmd_verify(suite: str, trials, seed: int, out_dir: Optional[Path]) -> int:
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 1
    log = sys.stdout if out_dir is not None else sys.stderr
    results = run_suite(suite, trials, seed, report=lambda r: print(r.line(), file=log,
                                                                    flush=True))
    report = {"suite": suite, "passed": all(r.passed for r in results),
              "criteria": [r.to_dict() for r in results]}
    text = json.dumps(report, indent=2) + "\n"
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"verify_{suite}.json").write_text(text)
    else:
        sys.stdout.write(text)
    if any(r.error for r in results):
        return 1
    return 0 if report["passed"] else 2


DEMOS = ("weak-approach", "oakes-dawid", "foster")


def cmd_demo(name: str, n: Optional[int], eps: Optional[float], seed: int) -> int:
    if name == "weak-approach":
        N = 100 if n is None else n
        if N < 2 or N % 2:
            print("weak-approach needs an even --n >= 2", file=sys.stderr)
            return 1
        worst = 0.0
        for label, make in WEAK_NATURES.items():
            dist = weak_approach_demo(N, make(N), seed)
            worst = max(worst, dist)
            print(f"nature={label:12s} terminal distance after {2 * N} stages: {dist:.6g}")
        print(f"max terminal distance: {worst:.6g} (1/N = {1.0 / N:.6g})")
        return 0 if worst <= 1.0 / N else 2
    if name == "oakes-dawid":
        N = 10000 if n is None else n
        e = 0.1 if eps is None else eps
        preds, outs = frequency_forecaster_vs_oakes_dawid(N)
        score = eps_calibration_score_1d(preds, outs, e)
        print(f"frequency forecaster vs Oakes-Dawid, n={N}, eps={e}: "
              f"eps-calibration score {score:.6g}")
        return 0
    if name == "foster":
        N = 10000 if n is None else n
        e = 0.05 if eps is None else eps
        try:
            run = run_foster(e, N, "oakes-dawid", seed)
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        print(f"Foster forecaster vs Oakes-Dawid, eps={e}, n={N}: "
              f"max overshoot max(e, d, 0)={run.max_excess:.6g} "
              f"max probes={run.max_probes}")
        for l in range(run.e.shape[0]):
            print(f"  cell {l}: e={run.e[l]:+.6g} d={run.d[l]:+.6g}")
        return 0
    print(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="approachlab",
                                description="Approachability, regret and calibration experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--trials", type=int, help="number of seeds")
        sp.add_argument("--seed", type=int, help="base seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--n", type=int, help="number of stages")

    s = sub.add_parser("simulate", help="run one configured Monte-Carlo experiment")
    s.add_argument("--config", help="JSON experiment configuration")
    common(s)
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help=", ".join(SUITES))
    v.add_argument("--config", help="unused; accepted for symmetry")
    common(v)
    d = sub.add_parser("demo", help="run a named demonstration")
    d.add_argument("name", help=", ".join(DEMOS))
    d.add_argument("--eps", type=float, help="calibration slack")
    common(d)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        for flag in ("trials", "n"):
            val = getattr(args, flag, None)
            if val is not None and val < (1 if flag == "trials" else 0):
                raise ConfigError(f"--{flag} is out of range")
        if args.command == "simulate":
            cfg = load_config(args.config)
            for flag in ("trials", "seed", "n", "out"):
                if getattr(args, flag) is not None:
                    cfg[flag] = getattr(args, flag)
            if cfg["seed"] < 0:
                raise ConfigError("--seed must be nonnegative")
            return cmd_simulate(cfg, Path(cfg["out"]))
        if args.command == "verify":
            out = Path(args.out) if args.out else None
            return cmd_verify(args.suite, args.trials, args.seed or 0, out)
        return cmd_demo(args.name, args.n, args.eps, args.seed or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # operational failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
