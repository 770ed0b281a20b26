"""Experiment runner CLI.

Subcommands: ``run``, ``compare``, ``lr-finder``, ``saddle-mc``,
``stability-sweep``. Experiments are described by a single JSON config
document; the ``--seed``, ``--out``, ``--function`` and ``--optimizer``
flags override the corresponding config fields. Outputs are UTF-8
comma-delimited CSV with a header row plus JSON summaries; floats are
printed in shortest round-trip form so identical configs reproduce
byte-identical CSV payloads. A PNG figure is rendered next to each report
unless ``--no-plot`` is given.

Exit codes: 0 on success, 2 on a malformed config or unknown
function/optimizer name (nothing is written), 3 on a numerical failure
(partial outputs are flushed first).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import (
    BtgdError,
    LineSearchConfig,
    ScalarField,
    StopRule,
    Trajectory,
    Vector,
    as_point,
)
from .diagnostics import (
    convergence_report,
    detect_stabilization,
    saddle_escape_outcomes,
)
from .functions import CORPUS, NamedObjective, make_objective
from .minibatch import (
    BatchSampler,
    MiniBatchProblem,
    RescaleMode,
    lr_finder,
    problem_from_json,
    run_mbt_gd,
    run_mbt_mmt,
    run_mbt_nag,
)
from .optimizers import (
    Constant,
    DirectionOracle,
    ExplicitSequence,
    MomentumState,
    RobbinsMonro,
    run_backtracking_gd,
    run_backtracking_mmt,
    run_backtracking_nag,
    run_inexact_backtracking_gd,
    run_mmt,
    run_nag,
    run_scheduled_gd,
    run_simplified_bmmt,
    run_simplified_bnag,
    run_standard_gd,
    run_two_way_gd,
)

__all__ = ["main"]


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_config(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.config is not None:
        raw = Path(args.config).read_text(encoding="utf-8")
        try:
            config = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out"] = args.out
    if args.function is not None:
        config.setdefault("function", {})["name"] = args.function
    if getattr(args, "optimizer", None) is not None:
        config.setdefault("optimizer", {})["name"] = args.optimizer
    if args.no_plot:
        config["plots"] = False
    return config


def _build_stop(config: dict) -> StopRule:
    spec = config.get("stop", {})
    try:
        return StopRule(
            eps=float(spec.get("eps", 1e-8)),
            max_iters=int(spec.get("max_iters", 10_000)),
            divergence_radius=float(spec.get("divergence_radius", 1e12)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad stop rule: {exc}") from exc


def _build_linesearch(spec: dict, default_alpha: float = 0.5) -> LineSearchConfig:
    try:
        return LineSearchConfig(
            alpha=float(spec.get("alpha", default_alpha)),
            beta=float(spec.get("beta", 0.5)),
            delta0=float(spec.get("delta0", 1.0)),
            max_halvings=int(spec.get("max_halvings", 100)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad line-search config: {exc}") from exc


def _build_objective(config: dict) -> NamedObjective:
    spec = config.get("function")
    if not spec or "name" not in spec:
        raise ConfigError("config needs a function name (\"function\": {\"name\": ...})")
    params = {k: v for k, v in spec.items() if k != "name"}
    try:
        return make_objective(spec["name"], **params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad function parameters: {exc}") from exc


def _build_problem(config: dict) -> MiniBatchProblem:
    spec = dict(config.get("problem", {}))
    spec.setdefault("kind", "least_squares")
    spec.setdefault("n_samples", 100)
    spec.setdefault("dimension", 2)
    spec.setdefault("noise", 0.0)
    spec.setdefault("seed", config.get("seed", 0))
    try:
        return problem_from_json(spec)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad problem description: {exc}") from exc


def _resolve_z0(config: dict, dimension: int) -> Vector:
    spec = config.get("z0")
    seed = int(config.get("seed", 0))
    if spec is None:
        raise ConfigError("config needs a starting point (\"z0\")")
    if isinstance(spec, (list, tuple)):
        try:
            return as_point(spec, dimension)
        except ValueError as exc:
            raise ConfigError(f"bad z0: {exc}") from exc
    if isinstance(spec, dict) and "ball" in spec:
        ball = spec["ball"]
        rng = np.random.default_rng(seed)
        center = np.asarray(ball.get("center", np.zeros(dimension)), dtype=np.float64)
        radius = float(ball.get("radius", 1.0))
        direction = rng.standard_normal(dimension)
        direction /= np.linalg.norm(direction)
        return as_point(center + direction * radius * rng.uniform() ** (1.0 / dimension))
    if isinstance(spec, dict) and "annulus" in spec:
        if dimension != 2:
            raise ConfigError("annulus starts need a 2-dimensional objective")
        ann = spec["annulus"]
        rng = np.random.default_rng(seed)
        r = rng.uniform(float(ann["r_min"]), float(ann["r_max"]))
        theta = rng.uniform(0.0, 2.0 * np.pi)
        return as_point([r * np.cos(theta), r * np.sin(theta)])
    raise ConfigError("z0 must be a coordinate list, {\"ball\": ...} or {\"annulus\": ...}")


def _build_schedule(spec: dict):
    kind = spec.get("kind")
    try:
        if kind == "constant":
            return Constant(float(spec["delta"]))
        if kind == "explicit":
            return ExplicitSequence(tuple(float(d) for d in spec["deltas"]))
        if kind == "robbins_monro":
            return RobbinsMonro(float(spec["c"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _v_init(opt: dict, dimension: int) -> Vector:
    return as_point(opt.get("v_init", np.zeros(dimension)), dimension)


def _make_runner(opt: dict, seed: int) -> tuple[str, Callable[[ScalarField, Vector, StopRule], Trajectory]]:
    """Resolve an optimizer config dict into (label, runner)."""
    name = opt.get("name")
    if name == "standard_gd":
        delta = float(opt.get("delta", 1.0))
        return name, lambda f, z0, stop: run_standard_gd(f, z0, delta, stop)
    if name == "scheduled_gd":
        schedule = _build_schedule(opt.get("schedule", {}))
        verify = opt.get("verify_armijo")
        verify = float(verify) if verify is not None else None
        return name, lambda f, z0, stop: run_scheduled_gd(f, z0, schedule, stop, verify)
    if name == "backtracking_gd":
        cfg = _build_linesearch(opt)
        return name, lambda f, z0, stop: run_backtracking_gd(f, z0, cfg, stop)
    if name == "two_way_gd":
        cfg = _build_linesearch(opt)
        return name, lambda f, z0, stop: run_two_way_gd(f, z0, cfg, stop)
    if name == "inexact_backtracking_gd":
        cfg = _build_linesearch(opt)
        oracle = DirectionOracle(
            a1=float(opt.get("a1", 0.5)),
            a2=float(opt.get("a2", 2.0)),
            mu=float(opt.get("mu", 0.1)),
            seed=int(opt.get("oracle_seed", seed)),
        )
        return name, lambda f, z0, stop: run_inexact_backtracking_gd(f, z0, oracle, cfg, stop)
    if name in ("mmt", "nag"):
        gamma = float(opt.get("gamma", 0.9))
        delta = float(opt.get("delta", 0.1))
        runner = run_mmt if name == "mmt" else run_nag
        return name, lambda f, z0, stop: runner(
            f, z0, _v_init(opt, f.dimension), gamma, delta, stop
        )
    if name in ("backtracking_mmt", "backtracking_nag"):
        cfg = _build_linesearch(opt)
        gamma0 = float(opt.get("gamma0", 0.9))
        a1 = float(opt.get("a1", 0.5))
        a2 = float(opt.get("a2", 2.0))
        mu = float(opt.get("mu", 0.1))
        runner = run_backtracking_mmt if name == "backtracking_mmt" else run_backtracking_nag
        return name, lambda f, z0, stop: runner(
            f, z0, MomentumState(_v_init(opt, f.dimension), gamma0, cfg.delta0),
            cfg, stop, a1, a2, mu,
        )
    if name in ("simplified_bmmt", "simplified_bnag"):
        cfg = _build_linesearch(opt)
        gamma = float(opt.get("gamma", 0.9))
        runner = run_simplified_bmmt if name == "simplified_bmmt" else run_simplified_bnag
        return name, lambda f, z0, stop: runner(
            f, z0, _v_init(opt, f.dimension), cfg, stop, gamma
        )
    known = (
        "standard_gd scheduled_gd backtracking_gd two_way_gd inexact_backtracking_gd "
        "mmt nag backtracking_mmt backtracking_nag simplified_bmmt simplified_bnag "
        "mbt_gd mbt_mmt mbt_nag"
    ).split()
    raise ConfigError(f"unknown optimizer {name!r}; known: {known}")


def _write_trajectory_csv(path: Path, traj: Trajectory, dimension: int) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["index"] + [f"x{i}" for i in range(dimension)]
            + ["value", "grad_norm", "step_size", "backtrack_count", "func_evals"]
        )
        for r in traj.records:
            writer.writerow(
                [r.index] + [_fmt(c) for c in r.point]
                + [_fmt(r.value), _fmt(r.grad_norm), _fmt(r.step_size),
                   r.backtrack_count, r.func_evals]
            )


def _summary_payload(traj: Trajectory, f: ScalarField, config: dict) -> dict:
    report = convergence_report(traj, f)
    stab = detect_stabilization(traj)
    return {
        "config": config,
        "termination": traj.termination.value,
        "iterations": len(traj.records) - 1,
        "func_evals": traj.records[-1].func_evals,
        "final_point": [float(v) for v in report.final_point],
        "final_value": report.final_value,
        "final_grad_norm": report.final_grad_norm,
        "last_step_norm": report.last_step_norm,
        "classification": {
            "kind": report.classification.kind.value,
            "eigenvalues": list(report.classification.eigenvalues),
            "grad_norm": report.classification.grad_norm,
        },
        "stabilization": {
            "stabilized": stab.stabilized,
            "short_run": stab.short_run,
            "distinct_sigmas": list(stab.distinct_sigmas),
            "tail_constant_length": stab.tail_constant_length,
            "window": stab.window,
        },
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _out_dir(config: dict) -> Path:
    return Path(config.get("out", "btgd-out"))


def _plots_enabled(config: dict) -> bool:
    return bool(config.get("plots", True))


# -- subcommands ----------------------------------------------------------------


def cmd_run(config: dict) -> int:
    seed = int(config.get("seed", 0))
    stop = _build_stop(config)
    opt_spec = config.get("optimizer") or {}
    name = opt_spec.get("name")
    if name in ("mbt_gd", "mbt_mmt", "mbt_nag"):
        return _run_mbt_command(config, name, opt_spec, stop)
    objective = _build_objective(config)
    label, runner = _make_runner(opt_spec, seed)
    z0 = _resolve_z0(config, objective.field.dimension)
    out = _out_dir(config)

    traj = runner(objective.field, z0, stop)

    out.mkdir(parents=True, exist_ok=True)
    _write_trajectory_csv(out / "trajectory.csv", traj, objective.field.dimension)
    payload = _summary_payload(traj, objective.field, config)
    payload["function"] = objective.name
    payload["optimizer"] = label
    (out / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if _plots_enabled(config):
        from .figures import save_trajectory_figure

        save_trajectory_figure(traj, out / "trajectory.png", f"{objective.name} / {label}")
    print(f"{label} on {objective.name}: {traj.termination.value} "
          f"after {len(traj.records) - 1} iterations -> {out}")
    return 0


def _run_mbt_command(config: dict, name: str, opt_spec: dict, stop: StopRule) -> int:
    seed = int(config.get("seed", 0))
    problem = _build_problem(config)
    sampler = BatchSampler(
        n=problem.n_components,
        batch_size=int(config.get("batch_size", opt_spec.get("batch_size", 10))),
        seed=seed,
    )
    cfg = _build_linesearch(opt_spec, default_alpha=1e-4)
    epochs = int(opt_spec.get("epochs", config.get("epochs", 200)))
    kappa0 = np.array(_resolve_z0(config, problem.dimension)) if "z0" in config \
        else np.zeros(problem.dimension)
    out = _out_dir(config)
    if name == "mbt_gd":
        traj = run_mbt_gd(problem, sampler, kappa0, cfg, stop, epochs,
                          refresh_each_epoch=bool(opt_spec.get("refresh_each_epoch", False)))
    elif name == "mbt_mmt":
        traj = run_mbt_mmt(problem, sampler, kappa0, cfg, stop, epochs,
                           gamma=float(opt_spec.get("gamma", 0.9)))
    else:
        traj = run_mbt_nag(problem, sampler, kappa0, cfg, stop, epochs,
                           gamma=float(opt_spec.get("gamma", 0.9)))
    out.mkdir(parents=True, exist_ok=True)
    _write_trajectory_csv(out / "trajectory.csv", traj, problem.dimension)
    payload = _summary_payload(traj, problem.full_objective, config)
    payload["optimizer"] = name
    payload["lr_history"] = [[int(e), float(r)] for e, r in traj.aux.get("lr_history", [])]
    payload["stuck_epochs"] = traj.aux.get("stuck_epochs", [])
    (out / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if _plots_enabled(config):
        from .figures import save_trajectory_figure

        save_trajectory_figure(traj, out / "trajectory.png", f"least_squares / {name}")
    print(f"{name}: {traj.termination.value} after {len(traj.records) - 1} epochs -> {out}")
    return 0


def cmd_compare(config: dict) -> int:
    seed = int(config.get("seed", 0))
    stop = _build_stop(config)
    objective = _build_objective(config)
    specs = config.get("optimizers")
    if not isinstance(specs, list) or len(specs) < 2:
        raise ConfigError("compare needs an \"optimizers\" list with at least two entries")
    runners = [_make_runner(spec, seed) for spec in specs]
    z0 = _resolve_z0(config, objective.field.dimension)
    out = _out_dir(config)

    rows = []
    for label, runner in runners:
        traj = runner(objective.field, z0, stop)
        last = traj.records[-1]
        rows.append({
            "optimizer": label,
            "termination": traj.termination.value,
            "final_value": last.value,
            "final_grad_norm": last.grad_norm,
            "iterations": len(traj.records) - 1,
            "func_evals": last.func_evals,
        })

    out.mkdir(parents=True, exist_ok=True)
    with (out / "compare.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["optimizer", "termination", "final_value", "final_grad_norm",
                         "iterations", "func_evals"])
        for row in rows:
            writer.writerow([row["optimizer"], row["termination"], _fmt(row["final_value"]),
                             _fmt(row["final_grad_norm"]), row["iterations"], row["func_evals"]])
    if _plots_enabled(config):
        from .figures import save_compare_figure

        save_compare_figure(rows, out / "compare.png")
    for row in rows:
        print(f"{row['optimizer']:>24}: {row['termination']:<9} f={row['final_value']:.3e} "
              f"|g|={row['final_grad_norm']:.3e} evals={row['func_evals']}")
    return 0


def cmd_lr_finder(config: dict) -> int:
    seed = int(config.get("seed", 0))
    problem = _build_problem(config)
    sampler = BatchSampler(problem.n_components, int(config.get("batch_size", 10)), seed)
    cfg = _build_linesearch(config.get("linesearch", {}), default_alpha=1e-4)
    mode = RescaleMode(config.get("mode", "Sqrt"))
    n_batches = int(config.get("n_batches", 20))
    at = config.get("at")
    out = _out_dir(config)

    report = lr_finder(problem, sampler, cfg, n_batches, at, mode)

    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config,
        "per_batch_sigmas": list(report.per_batch_sigmas),
        "mean_sigma": report.mean_sigma,
        "rho": report.rho,
        "rescaled_sigma": report.rescaled_sigma,
        "mode": report.mode.value,
        "excluded_batches": list(report.excluded_batches),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out / "lr_finder.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if _plots_enabled(config):
        from .figures import save_lr_finder_figure

        save_lr_finder_figure(report, out / "lr_finder.png")
    print(f"lr-finder: mean={report.mean_sigma:.6g} rescaled({report.mode.value})="
          f"{report.rescaled_sigma:.6g} over {len(report.per_batch_sigmas)} batches -> {out}")
    return 0


def cmd_saddle_mc(config: dict) -> int:
    seed = int(config.get("seed", 0))
    stop = _build_stop(config)
    if "function" not in config:
        config["function"] = {"name": "quadratic_saddle"}
    objective = _build_objective(config)
    cfg = _build_linesearch(config.get("linesearch", {}))
    saddle = as_point(
        config.get("saddle", np.zeros(objective.field.dimension)),
        objective.field.dimension,
    )
    eps = float(config.get("eps", 0.1))
    n_samples = int(config.get("n_samples", 1000))
    out = _out_dir(config)

    outcomes = saddle_escape_outcomes(objective.field, saddle, eps, n_samples, cfg, stop, seed)
    fraction = sum(esc for _, esc in outcomes) / n_samples

    out.mkdir(parents=True, exist_ok=True)
    with (out / "saddle_mc.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample"] + [f"x{i}" for i in range(objective.field.dimension)]
                        + ["escaped"])
        for i, (z0, esc) in enumerate(outcomes):
            writer.writerow([i] + [_fmt(c) for c in z0] + [int(esc)])
    payload = {
        "config": config,
        "fraction": fraction,
        "eps": eps,
        "n_samples": n_samples,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out / "saddle_mc.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if _plots_enabled(config):
        from .figures import save_saddle_figure

        save_saddle_figure([z for z, _ in outcomes], [e for _, e in outcomes],
                           saddle, eps, out / "saddle_mc.png")
    print(f"saddle-mc: escape fraction {fraction:.4f} over {n_samples} samples -> {out}")
    return 0


def cmd_stability_sweep(config: dict) -> int:
    seed = int(config.get("seed", 0))
    problem = _build_problem(config)
    ls_spec = dict(config.get("linesearch", {}))
    mode = RescaleMode(config.get("mode", "Sqrt"))
    n_batches = int(config.get("n_batches", 20))
    at = config.get("at")
    delta_grid = [float(d) for d in config.get("delta0_grid", [1e-6, 1e-3, 1.0, 1e3])]
    k_grid = [int(k) for k in config.get("batch_size_grid", [5, 10, 25, 50])]
    if not delta_grid or not k_grid:
        raise ConfigError("stability-sweep needs nonempty delta0_grid and batch_size_grid")
    out = _out_dir(config)

    cells: list[list[float]] = []
    for k in k_grid:
        sampler = BatchSampler(problem.n_components, k, seed)
        row = []
        for d0 in delta_grid:
            spec = dict(ls_spec)
            spec["delta0"] = d0
            cfg = _build_linesearch(spec, default_alpha=1e-4)
            report = lr_finder(problem, sampler, cfg, n_batches, at, mode)
            row.append(report.rescaled_sigma)
        cells.append(row)

    out.mkdir(parents=True, exist_ok=True)
    with (out / "stability_sweep.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch_size"] + [f"delta0={d:g}" for d in delta_grid])
        for k, row in zip(k_grid, cells):
            writer.writerow([k] + [_fmt(v) for v in row])
    if _plots_enabled(config):
        from .figures import save_sweep_figure

        save_sweep_figure(delta_grid, k_grid, cells, out / "stability_sweep.png")
    for k, row in zip(k_grid, cells):
        ratio = max(row) / min(row) if min(row) > 0 else float("inf")
        print(f"batch_size {k:>4}: rescaled mean sigma "
              + " ".join(f"{v:.4g}" for v in row) + f"  (max/min {ratio:.3f})")
    return 0


# -- entry point ------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btgd",
        description="Backtracking gradient-descent experiments: seeded runs with "
                    "CSV/JSON reports and figures.",
        epilog="Known functions: " + ", ".join(sorted(CORPUS)),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "run one optimizer on one objective; writes trajectory.csv + summary.json"),
        ("compare", "run several optimizers from a shared start; writes compare.csv"),
        ("lr-finder", "average per-batch Armijo step sizes; writes lr_finder.json"),
        ("saddle-mc", "Monte Carlo saddle-escape fractions; writes saddle_mc.csv"),
        ("stability-sweep", "rescaled mean step size over a delta0 x batch-size grid"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="overrides config seed")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--function", type=str, default=None, help="objective name")
        p.add_argument("--optimizer", type=str, default=None, help="optimizer name")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    return parser


_COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "lr-finder": cmd_lr_finder,
    "saddle-mc": cmd_saddle_mc,
    "stability-sweep": cmd_stability_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](config)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BtgdError as exc:
        out = _out_dir(config)
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps({
            "error": type(exc).__name__,
            "message": str(exc),
            "config": config,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }, indent=2) + "\n", encoding="utf-8")
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
