"""Command line front end.

Commands
--------
analyze    growth profile and comparison constants
verdict    case decision, rate function and (with ``--symbol``) the symbol check
rate       table of ``psi(t)`` for a rate function
simulate   Monte Carlo ensemble and empirical rate report
selfcheck  closed-form, oracle and spot-value checks on the bundled models

Exit status: 0 success, 1 validation error, 2 numerical failure or
divergence, 3 Inconclusive verdict under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .asymptotics import RadialGrid, analyze
from .model import LyapunovParams, ModelError, ModelSpec
from .modelfile import load_model
from .simulator import SimConfig, SimulationError, empirical_rate_report, simulate_ensemble
from .verdict import INCONCLUSIVE, RateFunction, check_symbol_condition, psi, run_verdict

__all__ = ["RunConfig", "run", "main", "build_parser", "EXIT_OK", "EXIT_VALIDATION", "EXIT_NUMERIC", "EXIT_INCONCLUSIVE"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_INCONCLUSIVE = 3

COMMANDS = ("analyze", "verdict", "rate", "simulate", "selfcheck")


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation; ``None`` overrides fall back to the model file."""

    command: str
    model: str | None = None
    out: str = "."
    p: float | None = None
    lam: float | None = None
    rmin: float = 10.0
    rratio: float = 2.0 ** 0.5
    rcount: int = 40
    tailfrac: float = 0.5
    gamma: float = 0.5
    delta: float = 0.5
    x0: tuple | None = None
    horizon: float = 50.0
    step: float = 0.01
    eps: float = 0.01
    paths: int = 1000
    seed: int = 0
    bins: int | None = None
    record: float = 1.0
    strict: bool = False
    workers: int | None = None
    symbol: bool = False
    K: float | None = None
    q: float | None = None
    logpower: int = 0
    tmax: float = 100.0

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ModelError(f"unknown command {self.command!r}")
        for name in ("p", "lam"):
            v = getattr(self, name)
            if v is not None and not (0.0 < v < 1.0):
                raise ModelError(f"--{'lambda' if name == 'lam' else name} must lie in (0, 1)")
        for name in ("gamma", "delta"):
            if not (0.0 < getattr(self, name) < 1.0):
                raise ModelError(f"--{name} must lie in (0, 1)")
        if self.command in ("analyze", "verdict", "simulate") and self.model is None:
            raise ModelError(f"{self.command} needs --model")
        if self.command == "rate" and self.model is None and (self.K is None or self.q is None):
            raise ModelError("rate needs --model or both --K and --q")
        if self.bins is not None and self.bins < 2:
            raise ModelError("--bins must be at least 2")
        if not self.tmax >= 1.0:
            raise ModelError("--tmax must be at least 1")
        if not self.record > 0.0:
            raise ModelError("--record must be positive")

    def grid(self) -> RadialGrid:
        return RadialGrid(self.rmin, self.rratio, self.rcount, self.tailfrac)

    def n_workers(self) -> int:
        return self.workers if self.workers is not None else (os.cpu_count() or 1)


class _Failure(Exception):
    """Numerical failure reported with exit status 2."""


def _load(cfg: RunConfig) -> tuple[ModelSpec, LyapunovParams]:
    model, lyap = load_model(cfg.model)
    p = lyap.p if cfg.p is None else cfg.p
    lam = lyap.lam if cfg.lam is None else cfg.lam
    return model, LyapunovParams(p, lam)


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _diverging_rows(profile) -> list[str]:
    out = []
    for r in profile.rows:
        for name in ("phi_drift", "phi_ball_plus", "phi_ball_minus", "phi_big", "phi_large"):
            v = getattr(r, name)
            if not math.isfinite(v):
                out.append(f"diverging {name} at |x| = {r.radius:.6g} (direction {r.direction})")
    return out


def _cmd_analyze(cfg: RunConfig, out: Path) -> int:
    model, lyap = _load(cfg)
    grid, profile, report = analyze(model, lyap, cfg.grid(), cfg.n_workers())
    profile.to_csv(out / "growth_profile.csv")
    report.to_csv(out / "constants.csv")
    diag = _diverging_rows(profile)
    text = report.to_text()
    if diag:
        text += "\n" + "\n".join(f"error: {d}" for d in diag) + "\n"
    _write(out / "constants_report.txt", text)
    sys.stdout.write(text)
    return EXIT_NUMERIC if diag else EXIT_OK


def _cmd_verdict(cfg: RunConfig, out: Path) -> int:
    model, lyap = _load(cfg)
    grid, profile, report, v = run_verdict(model, lyap, cfg.grid(), cfg.gamma, cfg.delta, cfg.n_workers())
    profile.to_csv(out / "growth_profile.csv")
    report.to_csv(out / "constants.csv")
    _write(out / "constants_report.txt", report.to_text())
    v.to_csv(out / "verdict.csv")
    text = f"p = {lyap.p!r}, lambda = {lyap.lam!r}\n" + v.to_text()
    if cfg.symbol:
        sym = check_symbol_condition(model)
        sym.to_csv(out / "symbol.csv")
        text += sym.to_text()
    _write(out / "verdict.txt", text)
    sys.stdout.write(text)
    if cfg.strict and v.case == INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _rate_function(cfg: RunConfig) -> RateFunction | None:
    if cfg.K is not None and cfg.q is not None:
        return RateFunction(cfg.K, cfg.q, cfg.logpower, cfg.gamma, cfg.delta)
    model, lyap = _load(cfg)
    _, _, _, v = run_verdict(model, lyap, cfg.grid(), cfg.gamma, cfg.delta, cfg.n_workers(), compute_C=False)
    return v.rate


def _cmd_rate(cfg: RunConfig, out: Path) -> int:
    f = _rate_function(cfg)
    if f is None:
        _write(out / "psi.csv", "t,psi\n")
        sys.stdout.write("no rate function: the verdict does not provide one\n")
        return EXIT_INCONCLUSIVE if cfg.strict else EXIT_OK
    ts = np.arange(1, int(math.floor(cfg.tmax)) + 1, dtype=float)
    with open(out / "psi.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "psi"])
        for t in ts:
            w.writerow([repr(float(t)), repr(float(psi(t, f)))])
    sys.stdout.write(f"f(u) = {f.K!r} u^{f.q!r}{' ln(e-1+u)' if f.log_power else ''}; {len(ts)} rows written\n")
    return EXIT_OK


def _cmd_simulate(cfg: RunConfig, out: Path) -> int:
    model, lyap = _load(cfg)
    x0 = cfg.x0 if cfg.x0 is not None else (5.0,) + (0.0,) * (model.dimension - 1)
    if len(x0) != model.dimension:
        raise ModelError("--x0 length does not match the model dimension")
    stride = max(1, int(round(cfg.record / cfg.step)))
    sim = SimConfig(x0, cfg.horizon, cfg.step, cfg.eps, cfg.paths, cfg.seed, stride)
    ens = simulate_ensemble(model, sim, workers=cfg.n_workers())
    if ens.n_paths == 0:
        raise _Failure("every path exploded")
    ens.to_csv(out / "ensemble.csv")
    _, _, _, v = run_verdict(model, lyap, cfg.grid(), cfg.gamma, cfg.delta, cfg.n_workers(), compute_C=False)
    if v.rate is not None:
        f = v.rate

        def psi_fn(t):
            return psi(t, f)
    else:

        def psi_fn(t):
            return math.nan

    times = [t for t in ens.times[:-1] if t >= 1.0]
    if not times:
        raise ModelError("--horizon must leave at least one recorded time in [1, horizon)")
    rep = empirical_rate_report(ens, ens.states[-1], psi_fn, times, cfg.bins)
    rep.to_csv(out / "rate_report.csv")
    text = (
        f"paths kept {ens.n_paths}, aborted {ens.aborted}, config {ens.config_hash}\n"
        f"discarded small-jump variance at x0: {ens.discarded_variance!r}\n"
        f"verdict: {v.case}\n" + rep.to_text()
    )
    _write(out / "rate_report.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_selfcheck(cfg: RunConfig, out: Path) -> int:
    from .selfcheck import run_selfcheck

    results = run_selfcheck()
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    text = "\n".join(lines) + "\n"
    _write(out / "selfcheck.txt", text)
    sys.stdout.write(text)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERIC


_HANDLERS = {
    "analyze": _cmd_analyze,
    "verdict": _cmd_verdict,
    "rate": _cmd_rate,
    "simulate": _cmd_simulate,
    "selfcheck": _cmd_selfcheck,
}


def run(config: RunConfig) -> int:
    """Execute one command and return its exit status."""
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        config.validate()
        return _HANDLERS[config.command](config, out)
    except (ModelError, ValueError, OSError) as exc:
        _report_error(out, config.command, f"validation error: {exc}")
        return EXIT_VALIDATION
    except (_Failure, SimulationError, ArithmeticError, RuntimeError) as exc:
        _report_error(out, config.command, f"numerical failure: {exc}")
        return EXIT_NUMERIC


def _report_error(out: Path, command: str, message: str) -> None:
    sys.stderr.write(message + "\n")
    try:
        if out.is_dir():
            _write(out / f"{command}_error.txt", message + "\n")
    except OSError:
        pass


def _csv_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levyerg", description="Lyapunov ergodicity checks for Levy-type processes.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--model", help="model file")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--p", type=float, help="Lyapunov exponent p in (0, 1)")
    ap.add_argument("--lambda", dest="lam", type=float, help="ball exponent in (0, 1)")
    ap.add_argument("--rmin", type=float, default=10.0, help="first grid radius")
    ap.add_argument("--rratio", type=float, default=2.0 ** 0.5, help="grid ratio")
    ap.add_argument("--rcount", type=int, default=40, help="number of grid radii")
    ap.add_argument("--tailfrac", type=float, default=0.5, help="fraction of the grid used as the tail")
    ap.add_argument("--gamma", type=float, default=0.5, help="rate parameter gamma in (0, 1)")
    ap.add_argument("--delta", type=float, default=0.5, help="rate parameter delta in (0, 1)")
    ap.add_argument("--x0", type=_csv_floats, help="initial state, comma separated (default 5,0,...)")
    ap.add_argument("--horizon", type=float, default=50.0, help="simulation horizon")
    ap.add_argument("--step", type=float, default=0.01, help="Euler step h")
    ap.add_argument("--eps", type=float, default=0.01, help="small-jump cutoff")
    ap.add_argument("--paths", type=int, default=1000, help="number of paths")
    ap.add_argument("--seed", type=int, default=0, help="random seed")
    ap.add_argument("--bins", type=int, help="histogram bins for the TV estimate")
    ap.add_argument("--record", type=float, default=1.0, help="time between recorded states")
    ap.add_argument("--strict", action="store_true", help="exit 3 on an Inconclusive verdict")
    ap.add_argument("--workers", type=int, help="worker threads (default: all cores)")
    ap.add_argument("--symbol", action="store_true", help="also run the symbol condition check")
    ap.add_argument("--K", type=float, help="rate function constant for the rate command")
    ap.add_argument("--q", type=float, help="rate function exponent for the rate command")
    ap.add_argument("--logpower", type=int, choices=(0, 1), default=0, help="log factor in the rate function")
    ap.add_argument("--tmax", type=float, default=100.0, help="last time of the psi table")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(ns).items()})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
