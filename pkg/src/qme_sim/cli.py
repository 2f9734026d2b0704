"""Command line entry point: ``qme-sim {cycle,sweep,pulse-verify,mc}``.

Settings come from built-in defaults, then an optional YAML config file,
then command-line flags. Unknown config keys are rejected. The effective
configuration (minus the output path) is echoed into every output file.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
from typing import Optional, Sequence

import yaml

from . import __version__, constants
from .cycle import CycleConfig, normalize_backend, p_range, run_cycle, sweep
from .errors import ConfigError, QmeError
from .mc_errors import CYCLE_QUANTITIES, NoiseSpec, cycle_estimates
from .plotting import PLOT_KINDS, emit_plot
from .pulsesim import NoiseModel, angle_grid, verify_channel
from .tables import atomic_write, fmt, report_row, sweep_csv, to_csv, to_json, SWEEP_SCHEMA

log = logging.getLogger("qme_sim")

SEED_ENV = "QME_SIM_SEED"
EXPERIMENTS = ("cycle", "sweep", "pulse-verify", "mc")
DEFAULT_FORMAT = {"cycle": "json", "sweep": "csv", "pulse-verify": "csv", "mc": "csv"}
FORMATS = {"cycle": ("json", "csv"), "sweep": ("csv", "json", "svg"), "pulse-verify": ("csv", "json"), "mc": ("csv", "json")}
VERIFY_TOL = 1e-9

DEFAULTS = {
    "experiment": None,
    "nu_khz": constants.NU_KHZ,
    "temps_pev": list(constants.KBT_PRESETS_PEV),
    "p_grid": "0.55:1.0:0.05",
    "backend": "ideal",
    "tau_cycle_s": constants.TAU_CYCLE_S,
    "noise": {
        "enabled": True,
        "t1_h": constants.T1_H_S,
        "t1_c": constants.T1_C_S,
        "t2_h": constants.T2_H_S,
        "t2_c": constants.T2_C_S,
        "p1_eq_h": 0.5,
        "p1_eq_c": 0.5,
    },
    "mc": {"sigma_mag": 0.01, "sigma_qst": 0.01, "n_samples": 100, "seed": None},
    "pulse": {"n_angles": 20},
    "output": None,
    "plot": "eta-power-vs-p",
    "out_path": None,
}


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping at top level")
    return _merge(DEFAULTS, data)


def parse_p(spec) -> list:
    """``0.75``, ``0.6,0.7`` or inclusive range ``start:stop:step``; lists pass through."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    text = str(spec).strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            return p_range(start, stop, step)
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse p grid {spec!r}") from exc


def _parse_kbt(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse temperatures {text!r}") from exc


def _seed(cfg: dict) -> int:
    if cfg["mc"]["seed"] is not None:
        return int(cfg["mc"]["seed"])
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from exc
    return 0


def effective_config(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config)
    cfg["experiment"] = args.command
    if args.p is not None:
        cfg["p_grid"] = args.p
    if args.kbt is not None:
        cfg["temps_pev"] = _parse_kbt(args.kbt)
    if args.nu is not None:
        cfg["nu_khz"] = args.nu
    if args.backend is not None:
        cfg["backend"] = args.backend
    if args.noise is not None:
        cfg["noise"]["enabled"] = args.noise == "on"
    if args.seed is not None:
        cfg["mc"]["seed"] = args.seed
    if args.format is not None:
        cfg["output"] = args.format
    if args.out is not None:
        cfg["out_path"] = args.out
    if args.plot is not None:
        cfg["plot"] = args.plot
    if args.samples is not None:
        cfg["mc"]["n_samples"] = args.samples

    cfg["mc"]["seed"] = _seed(cfg)
    cfg["p_grid"] = parse_p(cfg["p_grid"])
    cfg["temps_pev"] = [float(t) for t in cfg["temps_pev"]]
    cfg["backend"] = normalize_backend(cfg["backend"])
    if cfg["output"] is None:
        cfg["output"] = DEFAULT_FORMAT[args.command]
    if cfg["output"] not in FORMATS[args.command]:
        raise ConfigError(f"format {cfg['output']!r} not available for {args.command}")
    if cfg["plot"] not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {cfg['plot']!r}")
    if not cfg["p_grid"] or not cfg["temps_pev"]:
        raise ConfigError("p grid and temperature list must be non-empty")
    return cfg


def _noise(cfg: dict) -> NoiseModel:
    return NoiseModel(**cfg["noise"])


def _meta(cfg: dict) -> dict:
    meta = {k: v for k, v in cfg.items() if k != "out_path"}
    meta["version"] = __version__
    return meta


def _matrix(m) -> dict:
    return {"re": [[float(fmt(x.real)) for x in row] for row in m], "im": [[float(fmt(x.imag)) for x in row] for row in m]}


def cmd_cycle(cfg: dict) -> tuple:
    noise = _noise(cfg)
    rows, full = [], []
    for kbt in cfg["temps_pev"]:
        for p in cfg["p_grid"]:
            r = run_cycle(
                CycleConfig(p=p, kBT=kbt, nu=cfg["nu_khz"], tau_cycle=cfg["tau_cycle_s"], backend=cfg["backend"], noise=noise)
            )
            row = report_row(r)
            row["q_used"] = r.q_used
            rows.append(row)
            full.append(dict(row, rho1=_matrix(r.rho1), rho2=_matrix(r.rho2), rho3=_matrix(r.rho3)))
    if cfg["output"] == "csv":
        return to_csv(rows, list(rows[0]), "qme-sim/cycle/v1", _meta(cfg)), 0
    doc = json.loads(to_json(rows, "qme-sim/cycle/v1", _meta(cfg)))
    for target, extra in zip(doc["rows"], full):
        target.update({k: extra[k] for k in ("rho1", "rho2", "rho3")})
    return json.dumps(doc, indent=2, sort_keys=True) + "\n", 0


def cmd_sweep(cfg: dict) -> tuple:
    reports = sweep(
        cfg["p_grid"],
        cfg["temps_pev"],
        backend=cfg["backend"],
        nu=cfg["nu_khz"],
        tau_cycle=cfg["tau_cycle_s"],
        noise=_noise(cfg),
    )
    if cfg["output"] == "svg":
        return emit_plot(reports, cfg["plot"]), 0
    if cfg["output"] == "json":
        return to_json([report_row(r) for r in reports], SWEEP_SCHEMA, _meta(cfg)), 0
    return sweep_csv(reports, _meta(cfg)), 0


def cmd_pulse_verify(cfg: dict) -> tuple:
    noise = _noise(cfg)
    rows = []
    failed = False
    for channel in ("a", "b"):
        for angle in angle_grid(int(cfg["pulse"]["n_angles"])):
            clean = verify_channel(channel, angle)
            noisy = verify_channel(channel, angle, noise=noise, total_duration=cfg["tau_cycle_s"])
            ok = clean >= 1.0 - VERIFY_TOL
            failed |= not ok
            rows.append(
                {"channel": channel, "theta": angle, "choi_fidelity_noiseless": clean, "choi_fidelity_noisy": noisy, "pass": "yes" if ok else "no"}
            )
    cols = ["channel", "theta", "choi_fidelity_noiseless", "choi_fidelity_noisy", "pass"]
    schema = "qme-sim/pulse-verify/v1"
    text = to_json(rows, schema, _meta(cfg)) if cfg["output"] == "json" else to_csv(rows, cols, schema, _meta(cfg))
    return text, 1 if failed else 0


def cmd_mc(cfg: dict) -> tuple:
    spec = NoiseSpec(
        sigma_mag=cfg["mc"]["sigma_mag"],
        sigma_qst=cfg["mc"]["sigma_qst"],
        n_samples=int(cfg["mc"]["n_samples"]),
        seed=int(cfg["mc"]["seed"]),
    )
    noise = _noise(cfg)
    rows = []
    for kbt in cfg["temps_pev"]:
        for p in cfg["p_grid"]:
            c = CycleConfig(p=p, kBT=kbt, nu=cfg["nu_khz"], tau_cycle=cfg["tau_cycle_s"], backend=cfg["backend"], noise=noise)
            row = {"p": p, "kBT_pev": kbt}
            try:
                est = cycle_estimates(c, spec)
            except QmeError as exc:
                row.update({f"{q}_{s}": math.nan for q in CYCLE_QUANTITIES for s in ("mean", "std")})
                row.update(n=0, backend=c.backend, flags=f"error:{type(exc).__name__}")
            else:
                for q in CYCLE_QUANTITIES:
                    row[f"{q}_mean"] = est[q].mean
                    row[f"{q}_std"] = est[q].std
                row.update(n=est["heat_p"].n, backend=c.backend, flags="")
            rows.append(row)
    cols = ["p", "kBT_pev"] + [f"{q}_{s}" for q in CYCLE_QUANTITIES for s in ("mean", "std")] + ["n", "backend", "flags"]
    schema = "qme-sim/mc/v1"
    text = to_json(rows, schema, _meta(cfg)) if cfg["output"] == "json" else to_csv(rows, cols, schema, _meta(cfg))
    return text, 0


COMMANDS = {"cycle": cmd_cycle, "sweep": cmd_sweep, "pulse-verify": cmd_pulse_verify, "mc": cmd_mc}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qme-sim", description="Measurement-powered qubit engine simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--p", help="strength: value, comma list or start:stop:step")
    common.add_argument("--kbt", help="comma-separated spin temperatures in peV")
    common.add_argument("--nu", type=float, help="working-substance frequency in kHz")
    common.add_argument("--backend", choices=("ideal", "pulse"))
    common.add_argument("--noise", choices=("on", "off"), help="relaxation in the pulse backend")
    common.add_argument("--seed", type=int, help=f"Monte Carlo seed (fallback: ${SEED_ENV})")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "svg"))
    common.add_argument("--plot", choices=sorted(PLOT_KINDS), help="plot kind for svg output")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return parser


def _error_record(exc: BaseException) -> str:
    return json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}, sort_keys=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = effective_config(args)
        log.info("running %s with %d p values x %d temperatures", args.command, len(cfg["p_grid"]), len(cfg["temps_pev"]))
        text, status = COMMANDS[args.command](cfg)
        if cfg["out_path"]:
            atomic_write(cfg["out_path"], text)
        else:
            sys.stdout.write(text)
    except (QmeError, OSError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return 2
    if status:
        print(_error_record(QmeError(f"{args.command} check failed")), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
