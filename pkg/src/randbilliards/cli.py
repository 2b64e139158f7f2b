"""Command-line experiment runner.

Usage::

    randbilliards SUBCOMMAND [--config FILE] [--alpha 1/8] [--surface flat] ...

Settings are resolved in the order built-in default, ``BILLIARDS_SEED``
(seed only), config file, command-line flag; later sources win.  Every
subcommand writes its files into ``--out`` and prints one JSON line to
standard output.  Exit status is 0 on success, 1 for invalid input and 2 when
an internal invariant or a ``verify`` check fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import billiard, chain, diagnostics, export, geometry, measures, verify
from .billiard import PhasePoint
from .errors import DomainError, InvariantError
from .feres import FeresParams

__all__ = ["ExperimentConfig", "load_config", "run", "main"]

SUBCOMMANDS = ("table", "chain", "simulate", "evolve", "phase-evolve", "lyapunov", "mixing", "dense", "verify")


@dataclass(frozen=True)
class ExperimentConfig:
    """Effective settings; angles are kept as text so ``"m/n"`` (of pi) survives a round trip."""

    surface: str = "flat"
    r0: float = 1.0
    alpha: str = "0.5"
    theta0: str = "1.0"
    s0: float = 0.0
    n_steps: int = 1000
    ensemble: int = 100_000
    bins: int = 2000
    seed: int = 0
    output_dir: str = "out"
    workers: int = 1
    start: str = "lebesgue"
    direction: str = "0,1"
    lags: str = "0,1,10,50"
    region: str = "quarter"

    def table(self):
        return geometry.make_table(self.surface, self.r0)

    def params(self) -> FeresParams:
        return FeresParams.parse(self.alpha)

    def theta(self) -> float:
        return parse_angle(self.theta0)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


def parse_angle(text: str) -> float:
    """Radians from a decimal, or from ``"m/n"`` read as ``m*pi/n``."""
    text = str(text).strip()
    if "/" in text:
        f = Fraction(text)
        return f.numerator * math.pi / f.denominator
    return float(text)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown setting {key!r}")
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(parse_angle(value)) if key == "s0" else float(value)
    except ValueError:
        raise ValueError(f"bad value for {key}: {value!r}") from None
    return str(value).strip()


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = _coerce(key.replace("-", "_"), value)
    return out


def load_config(file=None, overrides=None, environ=None) -> ExperimentConfig:
    environ = os.environ if environ is None else environ
    values = {}
    if environ.get("BILLIARDS_SEED"):
        values["seed"] = _coerce("seed", environ["BILLIARDS_SEED"])
    if file is not None:
        values.update(read_config_file(file))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    cfg = ExperimentConfig(**values)
    if not 0 <= cfg.seed < 1 << 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    cfg.params()
    cfg.table()
    return cfg


# -- subcommands -----------------------------------------------------------------


def _cmd_table(cfg, out):
    table = cfg.table()
    info = table.as_dict() | {"max_gamma_prime": table.max_derivative,
                              "chord_factor": table.chord_factor}
    export.write_json(out / "table.json", info)
    return info


def _cmd_chain(cfg, out):
    params = cfg.params()
    summary = chain.chain_summary(params, cfg.theta(), max_states=max(cfg.n_steps, 1))
    export.write_json(out / "chain.json", summary)
    result = {k: summary[k] for k in ("n_states", "truncated")}
    if not summary["truncated"]:
        states = chain.enumerate_states(params, cfg.theta(), max(cfg.n_steps, 1))
        export.write_chain_csv(out / "chain.csv", chain.build_matrix(states, params))
        result["irreducible"] = summary["irreducible"]
        result["period"] = summary.get("period")
    return result


def _cmd_simulate(cfg, out):
    table = cfg.table()
    p0 = PhasePoint(cfg.s0, cfg.theta())
    traj = billiard.simulate(table, cfg.params(), p0, cfg.n_steps, cfg.seed)
    export.write_trajectory_csv(out / "trajectory.csv", traj)
    export.write_trajectory_jsonl(out / "trajectory.jsonl", traj)
    return {"steps": len(traj), "final_s": float(traj.s[-1]), "final_theta": float(traj.theta[-1])}


def _start_histogram(cfg, n_bins):
    if cfg.start == "lebesgue":
        return measures.uniform_histogram(n_bins)
    if cfg.start == "liouville":
        return measures.liouville_histogram(n_bins)
    if cfg.start == "half":
        return measures.histogram_from_density(_half_density, n_bins)
    if cfg.start == "point":
        return measures.atomic_histogram([cfg.theta()], [1.0], n_bins)
    raise ValueError(f"unknown start {cfg.start!r}; use lebesgue, liouville, half or point")


def _half_density(theta):
    return 2.0 * (np.asarray(theta) < math.pi / 2)


def _cmd_evolve(cfg, out):
    params = cfg.params()
    h0 = _start_histogram(cfg, cfg.bins)
    tv = measures.knudsen_run(params, h0, cfg.n_steps)
    export.write_columns(out / "evolve_trace.csv", ["step", "tv"], [[k, float(x)] for k, x in enumerate(tv)])
    Q = measures.transfer_matrix(params, cfg.bins)
    m = h0.masses
    for _ in range(cfg.n_steps):
        m = Q @ m
    export.write_histogram_csv(out / "evolve_final.csv", m)
    return {"final_tv": float(tv[-1]), "initial_tv": float(tv[0])}


def _cmd_phase_evolve(cfg, out):
    if cfg.start not in ("liouville", "half"):
        raise ValueError("phase-evolve supports start = liouville or half")
    density = _half_density if cfg.start == "half" else None
    res = measures.phase_knudsen(cfg.table(), cfg.params(), cfg.ensemble, cfg.n_steps, cfg.seed,
                                 density=density, density_max=2.0 if density else None,
                                 workers=cfg.workers)
    export.write_columns(out / "phase_trace.csv", ["step", "tv"], [[k, float(x)] for k, x in enumerate(res.tv)])
    return {"final_tv": float(res.tv[-1]), "max_abs_s_uniformity_z": float(np.abs(res.s_uniformity_z).max())}


def _cmd_lyapunov(cfg, out):
    v = tuple(float(x) for x in cfg.direction.split(","))
    if len(v) != 2:
        raise ValueError("direction must be two comma-separated numbers")
    tr = diagnostics.lyapunov(cfg.table(), cfg.params(), PhasePoint(cfg.s0, cfg.theta()), v, cfg.n_steps, cfg.seed)
    export.write_columns(out / "lyapunov.csv", ["n", "lambda_n"],
                         [[int(k), float(x)] for k, x in zip(tr.checkpoints, tr.lambda_n)])
    return {"final_lambda": float(tr.lambda_n[-1])}


def _cmd_mixing(cfg, out):
    table, params = cfg.table(), cfg.params()
    if cfg.region == "quarter":
        reg = diagnostics.quarter_region(table)
    elif cfg.region == "lattice":
        reg = diagnostics.lattice_region(table, params, cfg.theta())
    else:
        raise ValueError(f"unknown region {cfg.region!r}; use quarter or lattice")
    lags = [int(x) for x in cfg.lags.split(",")]
    tr = diagnostics.mixing_correlation(table, params, reg, reg, lags, cfg.ensemble, cfg.seed, cfg.workers)
    export.write_columns(out / "mixing.csv", ["lag", "estimate", "std_error"],
                         [[int(k), float(e), float(s)] for k, e, s in zip(tr.lags, tr.estimates, tr.std_errors)])
    return {"lags": lags, "z": [float(e / s) for e, s in zip(tr.estimates, tr.std_errors)]}


def _cmd_dense(cfg, out):
    rows = diagnostics.dense_orbit_test(cfg.table(), cfg.params(), PhasePoint(cfg.s0, cfg.theta()), cfg.n_steps)
    export.write_columns(out / "dense.csv", ["n", "gap"], [[n, float(g)] for n, g in rows])
    return {"final_gap": rows[-1][1], "L": cfg.table().L}


def _cmd_verify(cfg, out):
    results = verify.run_checks()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'pass' if ok else 'FAIL'}  {detail}")
    export.write_json(out / "verify.json", [{"check": n, "pass": ok, "detail": d} for n, ok, d in results])
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        raise _VerifyFailed(failed)
    return {"checks": len(results), "failed": []}


class _VerifyFailed(Exception):
    def __init__(self, failed):
        super().__init__(", ".join(failed))
        self.failed = failed


_COMMANDS = {
    "table": _cmd_table,
    "chain": _cmd_chain,
    "simulate": _cmd_simulate,
    "evolve": _cmd_evolve,
    "phase-evolve": _cmd_phase_evolve,
    "lyapunov": _cmd_lyapunov,
    "mixing": _cmd_mixing,
    "dense": _cmd_dense,
    "verify": _cmd_verify,
}


def _summary(command, cfg, status, result=None, error=None) -> str:
    doc = {"command": command, "status": status, "config": dataclasses.asdict(cfg) if cfg else None}
    if result is not None:
        doc["result"] = result
    if error is not None:
        doc["error"] = error
    return json.dumps(doc, sort_keys=True, default=export._jsonable)


def run(command: str, cfg: ExperimentConfig) -> int:
    """Execute one subcommand; returns the exit status."""
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
        result = _COMMANDS[command](cfg, out)
    except _VerifyFailed as exc:
        print(_summary(command, cfg, "fail", {"failed": exc.failed}))
        return 2
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        print(_summary(command, cfg, "invariant_error", error=str(exc)))
        return 2
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary(command, cfg, "domain_error", error=str(exc)))
        return 1
    print(_summary(command, cfg, "ok", result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randbilliards", description="Random circular billiard experiments.")
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--surface", choices=("flat", "hyperbolic", "spherical"))
    parser.add_argument("--r0", help="geodesic radius")
    parser.add_argument("--alpha", help="wedge angle: radians, or m/n meaning m*pi/n")
    parser.add_argument("--theta0", help="initial angle: radians, or m/n meaning m*pi/n")
    parser.add_argument("--s0", help="initial boundary position")
    parser.add_argument("--n-steps", dest="n_steps")
    parser.add_argument("--ensemble")
    parser.add_argument("--bins")
    parser.add_argument("--seed")
    parser.add_argument("--out", dest="output_dir")
    parser.add_argument("--workers")
    parser.add_argument("--start", help="lebesgue, liouville, half or point")
    parser.add_argument("--direction", help="tangent vector, e.g. 0,1")
    parser.add_argument("--lags", help="comma-separated lags")
    parser.add_argument("--region", help="quarter or lattice")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_config(args.config, overrides)
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary(args.command, None, "domain_error", error=str(exc)))
        return 1
    return run(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
