"""Command-line front end.

Every subcommand resolves its parameters from built-in defaults, then an
optional JSON config file (--config), then explicit flags, runs one library
operation, and writes its outputs plus a manifest.json into --out.  The
manifest records {"command", "params"} with the fully resolved parameter
set, so re-running from the manifest reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import kernel, particle, reduced_flow, scan, spectral_pde
from .errors import (
    ConvergenceError,
    NoPeriodError,
    PhaseUndefinedError,
    ProjectionError,
    StabilityError,
)
from .potential import TrigPolynomial, design_potential, effective_force
from .spectral_pde import RunConfig

# Parameter tables: name -> (kind, default, help).  kind is one of
# float/int/str/bool/floats (comma-separated list).  A default of None
# marks a required parameter.
_COMMANDS = {
    "fixed-point": {
        "K": ("float", None, "coupling strength"),
        "sigma": ("float", 1.0, "noise amplitude"),
        "k_max": ("int", 64, "Fourier depth of the stored density record"),
    },
    "force": {
        "K": ("float", None, "coupling strength"),
        "potential": ("str", None, "potential slope, text form 'a0; a1,b1; ...'"),
        "route": ("str", "coefficient_map", "evaluation route: coefficient_map or convolution"),
    },
    "design": {
        "K": ("float", None, "coupling strength"),
        "target": ("str", None, "desired effective force, text form"),
    },
    "classify": {
        "K": ("float", None, "coupling strength"),
        "potential": ("str", None, "potential slope, text form"),
    },
    "period": {
        "K": ("float", None, "coupling strength"),
        "a": ("float", None, "first-harmonic amplitude (closed-form period)"),
        "potential": ("str", None, "general potential slope (quadrature period)"),
    },
    "pde-run": {
        "K": ("float", None, "coupling strength"),
        "delta": ("float", None, "timescale separation"),
        "potential": ("str", None, "potential slope, text form"),
        "n_modes": ("int", 50, "spectral truncation"),
        "dt": ("float", 0.01, "time step"),
        "t_end": ("float", None, "run length"),
        "sample_every": ("float", 0.0, "sampling interval (0 picks t_end/4096)"),
        "snapshots": ("bool", False, "write density snapshots along the run"),
        "distance": ("bool", True, "track the L2 distance to the manifold"),
    },
    "pde-period": {
        "K": ("float", None, "coupling strength"),
        "delta": ("float", None, "timescale separation"),
        "potential": ("str", None, "potential slope, text form"),
        "n_modes": ("int", 50, "spectral truncation"),
        "dt": ("float", 0.01, "time step"),
        "windings": ("int", 5, "full turns averaged by the estimate"),
    },
    "correction": {
        "K": ("float", None, "coupling strength"),
        "potential": ("str", None, "potential slope, text form"),
        "psi": ("float", 0.0, "manifold phase of the correction"),
        "n_modes": ("int", 64, "modes of the linearized solve"),
    },
    "residual-scaling": {
        "K": ("float", None, "coupling strength"),
        "potential": ("str", None, "potential slope, text form"),
        "deltas": ("floats", [0.005, 0.01, 0.02, 0.04], "delta ladder"),
        "n_modes": ("int", 50, "spectral truncation"),
        "dt": ("float", 0.01, "time step"),
    },
    "particle-run": {
        "K": ("float", None, "coupling strength"),
        "delta": ("float", None, "timescale separation"),
        "potential": ("str", None, "potential slope, text form"),
        "n": ("int", 10000, "ensemble size"),
        "dt": ("float", 2e-3, "time step"),
        "t_end": ("float", None, "run length"),
        "seed": ("int", 0, "random seed"),
        "sample_every": ("float", 0.0, "sampling interval (0 samples every step)"),
    },
    "scan": {
        "j": ("int", 1, "forcing harmonic"),
        "K_min": ("float", 1.2, "lowest coupling"),
        "K_max": ("float", 16.0, "highest coupling"),
        "n_K": ("int", 33, "coupling grid size"),
        "a_min": ("float", 0.0, "lowest amplitude"),
        "a_max": ("float", 2.0, "highest amplitude"),
        "n_a": ("int", 41, "amplitude grid size"),
        "workers": ("int", 0, "worker threads (0 = serial)"),
    },
    "table1": {
        "K": ("float", 2.0, "coupling strength"),
        "a": ("float", 1.1, "first-harmonic amplitude"),
        "deltas": ("floats", [0.005, 0.01, 0.02, 0.04, 0.08], "delta ladder"),
        "n_modes": ("int", 50, "spectral truncation"),
        "dt": ("float", 0.01, "time step"),
        "windings": ("int", 5, "full turns averaged per row"),
    },
}

_ERRORS = (
    ConvergenceError,
    NoPeriodError,
    PhaseUndefinedError,
    ProjectionError,
    StabilityError,
    ValueError,
)


def _parse_potential(value) -> TrigPolynomial:
    if isinstance(value, TrigPolynomial):
        return value
    if isinstance(value, dict):
        return TrigPolynomial.from_json_dict(value)
    if isinstance(value, str):
        return TrigPolynomial.from_text(value)
    raise ValueError(f"cannot read a potential from {value!r}")


def _require(params: dict, *names):
    for name in names:
        if params.get(name) is None:
            raise ValueError(f"parameter '{name}' is required")


def _write(out_dir: Path, name: str, text: str) -> Path:
    path = out_dir / name
    path.write_text(text)
    return path


def _write_json(out_dir: Path, name: str, payload: dict) -> Path:
    return _write(out_dir, name, json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Command bodies
# ---------------------------------------------------------------------------


def _cmd_fixed_point(params, out):
    _require(params, "K")
    sd = kernel.solve_order_parameter(params["K"], sigma=params["sigma"], k_max=params["k_max"])
    _write(out, "stationary.txt", sd.to_record())
    return {"r": sd.r, "synchronized": sd.synchronized}


def _cmd_force(params, out):
    _require(params, "K", "potential")
    vp = _parse_potential(params["potential"])
    sd = kernel.solve_order_parameter(params["K"])
    eff = effective_force(vp, sd, route=params["route"])
    _write(out, "force.txt", eff.force.to_text())
    _write_json(out, "force.json", eff.force.to_json_dict())
    return {"degree": eff.force.degree}


def _cmd_design(params, out):
    _require(params, "K", "target")
    target = _parse_potential(params["target"])
    sd = kernel.solve_order_parameter(params["K"])
    vp = design_potential(target, sd)
    _write(out, "potential.txt", vp.to_text())
    _write_json(out, "potential.json", vp.to_json_dict())
    return {"degree": vp.degree}


def _cmd_classify(params, out):
    _require(params, "K", "potential")
    vp = _parse_potential(params["potential"])
    sd = kernel.solve_order_parameter(params["K"])
    eff = effective_force(vp, sd)
    cls = reduced_flow.classify(eff.force)
    _write(out, "classification.json", cls.to_json() + "\n")
    return {"kind": cls.kind}


def _cmd_period(params, out):
    _require(params, "K")
    if params.get("a") is not None:
        tau = reduced_flow.period_first_harmonic(params["a"], params["K"])
    elif params.get("potential") is not None:
        vp = _parse_potential(params["potential"])
        sd = kernel.solve_order_parameter(params["K"])
        cls = reduced_flow.classify(effective_force(vp, sd).force)
        if cls.kind != "periodic":
            raise NoPeriodError(f"reduced flow is {cls.kind}")
        tau = cls.period
    else:
        raise ValueError("give either 'a' or 'potential'")
    _write_json(out, "period.json", {"tau": tau})
    return {"tau": tau}


def _cmd_pde_run(params, out):
    _require(params, "K", "potential", "delta", "t_end")
    vp = _parse_potential(params["potential"])
    run = RunConfig(
        n_modes=params["n_modes"],
        dt=params["dt"],
        t_end=params["t_end"],
        sample_every=params["sample_every"] or None,
    )
    trace = spectral_pde.run_trajectory(
        vp, params["K"], params["delta"], run,
        collect_snapshots=params["snapshots"],
        track_distance=params["distance"],
    )
    _write(out, "trajectory.csv", spectral_pde.trajectory_csv(trace))
    _write(out, "final_snapshot.csv", spectral_pde.snapshot_csv(trace.final))
    for i, (t_snap, c_snap) in enumerate(trace.snapshots):
        state = spectral_pde.SpectralDensity(c_snap, t_snap)
        _write(out, f"snapshot_{i:04d}.csv", spectral_pde.snapshot_csv(state))
    return {"samples": len(trace.t), "final_time": trace.final.time}


def _cmd_pde_period(params, out):
    _require(params, "K", "potential", "delta")
    vp = _parse_potential(params["potential"])
    run = RunConfig(n_modes=params["n_modes"], dt=params["dt"], windings=params["windings"])
    period = spectral_pde.measure_period(vp, params["K"], params["delta"], run)
    sd = kernel.solve_order_parameter(params["K"])
    cls = reduced_flow.classify(effective_force(vp, sd).force)
    payload = {
        "period": period,
        "reduced_period": cls.period,
        "reduced_over_delta": cls.period / params["delta"],
    }
    _write_json(out, "period.json", payload)
    return payload


def _cmd_correction(params, out):
    _require(params, "K", "potential")
    vp = _parse_potential(params["potential"])
    sd = kernel.solve_order_parameter(params["K"])
    corr = spectral_pde.solve_manifold_correction(params["psi"], vp, sd, n_modes=params["n_modes"])
    theta = kernel.TWO_PI * np.arange(512) / 512
    vals = corr.profile(theta)
    lines = ["theta,n"]
    lines += [f"{float(th)!r},{float(v)!r}" for th, v in zip(theta, vals)]
    _write(out, "correction.csv", "\n".join(lines) + "\n")
    payload = {"psi": corr.psi, "residual": corr.residual, "condition": corr.condition}
    _write_json(out, "correction.json", payload)
    return payload


def _cmd_residual_scaling(params, out):
    _require(params, "K", "potential")
    vp = _parse_potential(params["potential"])
    run = RunConfig(n_modes=params["n_modes"], dt=params["dt"])
    study = spectral_pde.phase_velocity_residual(vp, params["K"], params["deltas"], run)
    lines = ["delta,residual_max,shape_max"]
    for d, r, s in zip(study.deltas, study.residual_max, study.shape_max):
        lines.append(f"{float(d)!r},{float(r)!r},{float(s)!r}")
    _write(out, "scaling.csv", "\n".join(lines) + "\n")
    payload = {
        "residual_exponent": study.residual_exponent,
        "shape_exponent": study.shape_exponent,
    }
    _write_json(out, "scaling.json", payload)
    return payload


def _cmd_particle_run(params, out):
    _require(params, "K", "potential", "delta", "t_end")
    vp = _parse_potential(params["potential"])
    sd = kernel.solve_order_parameter(params["K"])
    ens = particle.init_from_stationary(sd, params["n"], seed=params["seed"])
    trace = particle.run_particles(
        ens, vp, params["K"], params["delta"], params["t_end"], params["dt"],
        sample_every=params["sample_every"] or None,
    )
    _write(out, "particles.csv", particle.trace_csv(trace))
    _write(out, "phases_final.txt", particle.phases_snapshot(trace.final))
    return {"samples": len(trace.t), "final_absZ": abs(trace.z[-1])}


def _cmd_scan(params, out):
    Ks = np.linspace(params["K_min"], params["K_max"], params["n_K"])
    amps = np.linspace(params["a_min"], params["a_max"], params["n_a"])
    diagram = scan.scan_harmonic(params["j"], Ks, amps, workers=params["workers"] or None)
    _write(out, "cells.csv", diagram.cells_csv())
    _write(out, "curve.csv", diagram.curve_csv())
    return {"cells": int(diagram.kinds.size)}


def _cmd_table1(params, out):
    vp = TrigPolynomial(a0=1.0, a=(0.0,), b=(params["a"],))
    tau = reduced_flow.period_first_harmonic(params["a"], params["K"])
    lines = ["delta,tau_over_delta,T_measured"]
    rows = []
    for delta in params["deltas"]:
        run = RunConfig(n_modes=params["n_modes"], dt=params["dt"], windings=params["windings"])
        T = spectral_pde.measure_period(vp, params["K"], delta, run)
        rows.append((delta, tau / delta, T))
        lines.append(f"{float(delta)!r},{float(tau / delta)!r},{float(T)!r}")
    _write(out, "table1.csv", "\n".join(lines) + "\n")
    return {"tau": tau, "rows": len(rows)}


_BODIES = {
    "fixed-point": _cmd_fixed_point,
    "force": _cmd_force,
    "design": _cmd_design,
    "classify": _cmd_classify,
    "period": _cmd_period,
    "pde-run": _cmd_pde_run,
    "pde-period": _cmd_pde_period,
    "correction": _cmd_correction,
    "residual-scaling": _cmd_residual_scaling,
    "particle-run": _cmd_particle_run,
    "scan": _cmd_scan,
    "table1": _cmd_table1,
}


# ---------------------------------------------------------------------------
# Dispatch and argument plumbing
# ---------------------------------------------------------------------------


def dispatch(command: str, params: dict, out_dir) -> dict:
    """Run one command with fully resolved params; returns its summary dict.

    Unknown parameters are rejected rather than ignored, so stale manifests
    fail loudly.  The resolved params land in out_dir/manifest.json.
    """
    if command not in _COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    table = _COMMANDS[command]
    unknown = set(params) - set(table)
    if unknown:
        raise ValueError(f"unknown parameters for {command}: {sorted(unknown)}")
    resolved = {name: spec[1] for name, spec in table.items()}
    resolved.update(params)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = _BODIES[command](resolved, out)
    manifest = {"command": command, "params": resolved}
    _write_json(out, "manifest.json", manifest)
    return summary


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotatorlab",
        description="mean-field rotator laboratory: reduced dynamics, spectral PDE, particles",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, table in _COMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--config", default=None, help="JSON file with parameters")
        for name, (kind, default, help_text) in table.items():
            flag = "--" + name.replace("_", "-")
            if kind == "bool":
                p.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction,
                               default=None, help=help_text)
            elif kind == "floats":
                p.add_argument(flag, dest=name, default=None,
                               help=help_text + " (comma-separated)")
            else:
                typ = {"float": float, "int": int, "str": str}[kind]
                p.add_argument(flag, dest=name, type=typ, default=None, help=help_text)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    command = args.command
    table = _COMMANDS[command]

    params = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        unknown = set(config) - set(table)
        if unknown:
            print(f"unknown config keys: {sorted(unknown)}", file=sys.stderr)
            return 2
        params.update(config)
    for name, (kind, _, _) in table.items():
        value = getattr(args, name)
        if value is None:
            continue
        if kind == "floats" and isinstance(value, str):
            value = [float(x) for x in value.split(",") if x.strip()]
        params[name] = value

    try:
        summary = dispatch(command, params, args.out)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
