"""Command-line entry point: ``quadftc trim|simulate|train|sweep``.

Exit status is 0 on success, 2 for configuration errors and 3 for runtime
failures (I/O, unreadable checkpoints, simulator errors).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__, kernels
from .config import RunConfig, check_controller, config_hash, dump_config, load_config
from .ddpg_agent import ActorPolicy, live_slots, train, write_learning_curve
from .dp_agent import DpController
from .environment import INITIAL_CONDITIONS, write_trajectory
from .episode import EpisodeResult, run_episode, trim_policy_for, zero_policy
from .errors import ConfigError, QuadError
from .neural import CheckpointError, load_checkpoint, save_checkpoint
from .params import QuadParams
from .propulsion import rotor_thrust, solve_trim

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

SWEEP_HEADER = ["ic", "Xmin", "Xmax", "Ymin", "Ymax", "Zmin", "Zmax", "hover_time", "done_reason"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quadftc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"quadftc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("trim", "solve the four-rotor hover trim"),
        ("simulate", "run one episode and write its trajectory"),
        ("train", "train the DDPG controller"),
        ("sweep", "run every configured initial condition"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="config file (defaults apply when omitted)")
        p.add_argument("--ic", help="initial condition for simulate: " + ", ".join(INITIAL_CONDITIONS))
        p.add_argument("--controller", help="none, trim, dp or ddpg:CHECKPOINT")
        p.add_argument("--duration", type=float, help="episode length in seconds")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", help="output directory")
        if name == "train":
            p.add_argument("--horizon", type=float, help="training episode length in seconds")
    return ap


def effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.controller is not None:
        try:
            check_controller(args.controller)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        changes["controller"] = args.controller
    if args.duration is not None:
        if args.duration < 0:
            raise ConfigError("--duration must be >= 0")
        changes["duration"] = args.duration
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.ic is not None and args.ic not in INITIAL_CONDITIONS:
        raise ConfigError(f"unknown initial condition {args.ic!r}")
    if getattr(args, "horizon", None) is not None:
        if not args.horizon > 0:
            raise ConfigError("--horizon must be > 0")
        cfg = cfg.replace("ddpg", horizon=args.horizon)
    return cfg.replace("run", **changes) if changes else cfg


def write_manifest(out: Path, command: str, cfg: RunConfig, extra: Optional[dict] = None) -> None:
    lines = [
        f"software=quadftc {__version__}",
        f"backend={kernels.BACKEND}",
        f"command={command}",
        f"seed={cfg.run.seed}",
        f"config_sha256={config_hash(cfg)}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    for line in dump_config(cfg).splitlines():
        key, value = line.split(" = ", 1)
        lines.append(f"config.{key}={value}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "config.txt").write_text(dump_config(cfg), encoding="utf-8")


def make_policy(cfg: RunConfig):
    spec = cfg.run.controller
    if spec == "none":
        return zero_policy
    if spec == "trim":
        return trim_policy_for(cfg.quad, cfg.env)
    if spec == "dp":
        return DpController(cfg.quad, cfg.env, cfg.dp)
    actor = load_checkpoint(spec[len("ddpg:"):])
    n_live = len(live_slots(cfg.env.failed))
    if actor.n_in != 6 or actor.n_out != n_live:
        raise CheckpointError(
            f"checkpoint maps {actor.n_in} -> {actor.n_out}; expected 6 -> {n_live}")
    return ActorPolicy(actor, cfg.env.failed)


def run_one(cfg: RunConfig, ic: str) -> EpisodeResult:
    levels = cfg.dp.levels if cfg.run.controller == "dp" else (1.0,)
    return run_episode(cfg.quad, cfg.env, make_policy(cfg), ic, cfg.run.duration,
                       arrest_level=levels[-1])


def cmd_trim(cfg: RunConfig, out: Optional[Path]) -> int:
    omega, f_trim = solve_trim(cfg.quad)
    residual = abs(rotor_thrust(omega, [0.0, 0.0, 0.0], cfg.quad) - f_trim) / f_trim
    print(f"omega_trim={omega!r} rad/s")
    print(f"f_trim={f_trim!r} N")
    print(f"trim_level={omega / cfg.quad.omega_max!r}")
    print(f"residual={residual:.3e}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path, ic: str) -> int:
    res = run_one(cfg, ic)
    write_trajectory(out / "trajectory.csv", res.rows)
    line = res.summary.to_line()
    (out / "summary.txt").write_text(line + "\n", encoding="utf-8")
    write_manifest(out, "simulate", cfg, {"ic": ic})
    print(line)
    return EXIT_OK


def cmd_train(cfg: RunConfig, out: Path) -> int:
    def progress(rec):
        if rec.episode % 100 == 0:
            print(f"episode={rec.episode} score={rec.score:.6g} steps={rec.steps} "
                  f"critic_loss={rec.critic_loss:.6g} noise_sigma={rec.noise_sigma:.4g}",
                  flush=True)

    result = train(cfg.quad, cfg.env, cfg.ddpg, cfg.run.seed, progress)
    write_learning_curve(out / "learning_curve.csv", result.curve)
    extra = {"episodes_run": len(result.curve)}
    if result.best_actor is not None:
        save_checkpoint(result.best_actor, out / "best_actor.ckpt")
        save_checkpoint(result.learner.actor, out / "actor.ckpt")
        save_checkpoint(result.learner.critic, out / "critic.ckpt")
        extra.update(best_episode=result.best_episode, best_score=repr(result.best_score))
    write_manifest(out, "train", cfg, extra)
    print(f"episodes={len(result.curve)} best_episode={result.best_episode} "
          f"best_score={result.best_score:.6g}")
    return EXIT_OK


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    rows: List[list] = []
    for ic in cfg.run.ics:
        try:
            s = run_one(cfg, ic).summary
            rows.append([ic, s.x_min, s.x_max, s.y_min, s.y_max, s.alt_min, s.alt_max,
                         s.hover_time, s.done_reason])
            print(s.to_line(), flush=True)
        except (QuadError, OSError, ValueError) as exc:
            nan = math.nan
            rows.append([ic, nan, nan, nan, nan, nan, nan, 0.0, f"Error:{type(exc).__name__}"])
            print(f"ic={ic} error={exc}", file=sys.stderr)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    write_manifest(out, "sweep", cfg)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "trim":
            return cmd_trim(cfg, None)
        out = Path(cfg.run.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.ic or "Nominal")
        if args.command == "train":
            return cmd_train(cfg, out)
        return cmd_sweep(cfg, out)
    except (QuadError, OSError, CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
