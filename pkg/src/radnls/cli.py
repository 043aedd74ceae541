"""Command-line entry points: ground-state, evolve, diagnose, lemma, selftest.

Configuration is JSON validated against CONFIG_SCHEMA; command-line flags
override config fields.  Exit codes: 0 ok, 1 a diagnostic check failed,
2 invalid input, 3 I/O error, 4 numerical guard tripped.

Outputs are deterministic for a fixed (config, seed): every JSON/CSV file
embeds the config hash, the artifact version, and the seed, and contains no
timestamps.  The environment variable RADNLS_OUTPUT_ROOT prefixes relative
output directories.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bands, core, diagnostics, evolution, fieldio, groundstate
from . import recurrence, selftest

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_GUARD = 4

CONFIG_SCHEMA = {
    "dimension": "even integer >= 2 (default 4)",
    "mu": "-1 focusing | 0 free | +1 defocusing (default -1)",
    "grid": {"r_max": "float > 0 (default 15.0)", "n": "int >= 16 (default 640)"},
    "time": {"dt": "float > 0 (default 1e-3)", "T": "float > 0 (default 1.0)",
             "cadence": "steps per snapshot, divides T/dt (default 10)"},
    "initial": {"kind": "gaussian | ground_state | sw | pc_ground_state | file",
                "params": "kind-specific: amplitude/width, t, path"},
    "diagnostics": ["{kind: virial|kinetic_localization|concentration|"
                    "frequency_decay|spatial_decay, ...parameters}"],
    "lemma": {"params": "{s, gamma, c1, m0, beta_prime, a_bound}",
              "sequence": "{kind: from_trajectory|synthetic_power|file, ...}"},
    "tol": "ground-state residual tolerance (default 1e-8)",
    "output_dir": "directory for artifacts (default 'out')",
    "seed": "integer seed recorded in outputs (default 0)",
    "format": "json | csv (default json; csv adds tables)",
}

DEFAULTS = {
    "dimension": 4,
    "mu": -1,
    "grid": {"r_max": 15.0, "n": 640},
    "time": {"dt": 1e-3, "T": 1.0, "cadence": 10},
    "initial": {"kind": "gaussian", "params": {"amplitude": 1.0, "width": 1.0}},
    "diagnostics": [],
    "tol": 1e-8,
    "output_dir": "out",
    "seed": 0,
    "format": "json",
}


class ConfigError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


class GuardTripped(RuntimeError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = DEFAULTS
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        unknown = set(raw) - set(CONFIG_SCHEMA)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)} "
                              f"(schema keys: {sorted(CONFIG_SCHEMA)})")
        cfg = _merge(cfg, raw)
    cfg = _merge(cfg, overrides)
    d = cfg["dimension"]
    if not (isinstance(d, int) and d >= 2 and d % 2 == 0):
        raise ConfigError(f"dimension out of range: {d} (need even integer >= 2)")
    if cfg["mu"] not in (-1, 0, 1):
        raise ConfigError(f"mu must be -1, 0 or 1, got {cfg['mu']}")
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {cfg['format']}")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def output_dir(cfg: dict) -> Path:
    root = os.environ.get("RADNLS_OUTPUT_ROOT", "")
    out = Path(cfg["output_dir"])
    if root and not out.is_absolute():
        out = Path(root) / out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output dir {out}: {exc}") from exc
    return out


def _stamp(cfg: dict, payload: dict) -> dict:
    return {"artifact_version": __version__, "config_hash": config_hash(cfg),
            "seed": cfg["seed"], **payload}


def write_json(cfg: dict, path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_stamp(cfg, payload), sort_keys=True, indent=1,
                               default=float) + "\n")


def write_csv(cfg: dict, path: Path, header: list[str], rows) -> None:
    lines = [f"# artifact_version={__version__} config_hash={config_hash(cfg)} seed={cfg['seed']}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _build_grid(cfg: dict) -> core.RadialGrid:
    return core.make_radial_grid(cfg["dimension"], cfg["grid"]["r_max"], cfg["grid"]["n"])


def _ground_state(cfg: dict, grid: core.RadialGrid, cache: Path):
    gs = fieldio.load_ground_state(cache, grid, cfg["tol"])
    if gs is None:
        gs = groundstate.solve_ground_state(grid, tol=cfg["tol"])
        fieldio.save_ground_state(gs, cache, cfg["tol"])
    return gs


def _initial_field(cfg: dict, grid: core.RadialGrid, cache: Path) -> core.RadialField:
    kind = cfg["initial"]["kind"]
    params = cfg["initial"].get("params", {})
    if kind == "gaussian":
        a = params.get("amplitude", 1.0)
        w = params.get("width", 1.0)
        return core.field_from_function(grid, lambda r: a * np.exp(-((r / w) ** 2)))
    if kind == "ground_state":
        return _ground_state(cfg, grid, cache).profile
    if kind == "sw":
        return groundstate.make_sw(_ground_state(cfg, grid, cache), params.get("t", 0.0))
    if kind == "pc_ground_state":
        return groundstate.make_pc(_ground_state(cfg, grid, cache), params.get("t", -1.0))
    if kind == "file":
        return fieldio.load_field_binary(params["path"], grid)
    raise ConfigError(f"unknown initial kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ground_state(cfg: dict) -> int:
    out = output_dir(cfg)
    grid = _build_grid(cfg)
    gs = groundstate.solve_ground_state(grid, tol=cfg["tol"])
    fieldio.save_ground_state(gs, out / "ground_state_cache", cfg["tol"])
    fieldio.save_field_binary(gs.profile, out / "ground_state.rfb")
    l3 = core.lebesgue_norm(gs.profile, 3.0) ** 3 if grid.d == 4 else None
    cert = {
        "dimension": gs.dimension,
        "mass": gs.mass,
        "mass_shooting": gs.mass_shooting,
        "mass_agreement": abs(gs.mass - gs.mass_shooting) / gs.mass,
        "kinetic": gs.kinetic,
        "residual": gs.residual,
        "energy_over_kinetic": core.energy(gs.profile, -1) / gs.kinetic,
        "gn_ratio": groundstate.gn_ratio(gs.profile, gs),
        "pohozaev_kinetic_ratio": (gs.kinetic / l3 if l3 else None),
        "iterations": gs.iterations,
    }
    write_json(cfg, out / "ground_state_certification.json", cert)
    print(f"ground state: M={gs.mass:.9g} residual={gs.residual:.3e} "
          f"shooting agreement={cert['mass_agreement']:.3e}")
    return EXIT_OK


def cmd_evolve(cfg: dict) -> int:
    out = output_dir(cfg)
    grid = _build_grid(cfg)
    sim = evolution.SimulationConfig(
        dimension=cfg["dimension"], mu=cfg["mu"], r_max=cfg["grid"]["r_max"],
        n=cfg["grid"]["n"], dt=cfg["time"]["dt"], t_final=cfg["time"]["T"],
        cadence=cfg["time"]["cadence"])
    u0 = _initial_field(cfg, grid, out / "ground_state_cache")
    traj = evolution.evolve(sim, u0)
    run_dir = out / "trajectory"
    fieldio.save_trajectory(traj, run_dir)
    summary = {
        "snapshots": len(traj),
        "final_time": traj.times[-1],
        "mass_drift": max(abs(m - traj.mass_log[0]) for m in traj.mass_log) / traj.mass_log[0],
        "guard_event": traj.guard_event,
        "warnings": traj.warnings,
    }
    if cfg["initial"]["kind"] == "sw":
        gs = _ground_state(cfg, grid, out / "ground_state_cache")
        target = groundstate.make_sw(gs, cfg["initial"].get("params", {}).get("t", 0.0)
                                     + traj.times[-1])
        summary["sw_final_l2_error"] = math.sqrt(core.mass(traj.fields[-1] - target) / gs.mass)
    write_json(cfg, out / "evolve_summary.json", summary)
    print(f"evolve: {len(traj)} snapshots to t={traj.times[-1]:g}, "
          f"mass drift {summary['mass_drift']:.3e}")
    if traj.guard_event is not None:
        print(f"guard tripped: {traj.guard_event}")
        raise GuardTripped(str(traj.guard_event))
    return EXIT_OK


def _diag_frequency_decay(cfg, traj, spec, out):
    grid = traj.grid
    ns = spec.get("Ns") or core.dyadic_scales(grid)[-4:]
    rep = diagnostics.frequency_decay_fit(traj, spec.get("shell_cut", 1.0), ns)
    base = out / "frequency_decay"
    write_json(cfg, base.with_suffix(".json"), rep.to_json_obj())
    if cfg["format"] == "csv":
        write_csv(cfg, base.with_suffix(".csv"), ["quantity", "N", "value"],
                  [(rep.table.quantity, s, v) for s, v in
                   zip(rep.table.scales, rep.table.values)])
    return rep.passes, {"exponent": rep.exponent, "threshold": rep.threshold,
                        "note": rep.note}


def _diag_spatial_decay(cfg, traj, spec, out):
    grid = traj.grid
    scales = core.dyadic_scales(grid)
    n_range = spec.get("N_range", [scales[0], scales[-1]])
    rs = spec.get("Rs", [1.0, 2.0, 4.0])
    rep = diagnostics.spatial_decay_scan(traj, tuple(n_range), rs)
    base = out / "spatial_decay"
    write_json(cfg, base.with_suffix(".json"), rep.to_json_obj())
    if cfg["format"] == "csv":
        write_csv(cfg, base.with_suffix(".csv"), ["quantity", "R", "value"],
                  [(rep.table.quantity, s, v) for s, v in
                   zip(rep.table.scales, rep.table.values)])
    return rep.passes, {"delta": rep.exponent, "note": rep.note}


def _diag_virial(cfg, traj, spec, out):
    r_cut = spec.get("R", math.inf)
    times = traj.times[2:-2]
    if not times:
        raise ConfigError("trajectory too short for the virial stencil")
    rows = []
    worst = 0.0
    ok = True
    for t in times:
        acc = diagnostics.virial_acceleration(traj, r_cut, t)
        idx = traj.index_at(t)
        k = core.gradient_norm_sq(traj.fields[idx])
        rows.append((t, acc, 8 * k))
        if traj.config.mu == 0 and k > 0:
            rel = abs(acc - 8 * k) / (8 * k)
            worst = max(worst, rel)
            ok = ok and rel < 0.05
    bound_ok = all(diagnostics.truncated_virial(f, r_cut)
                   <= (25 * r_cut / 24) ** 2 * m * (1 + 1e-9)
                   for f, m in zip(traj.fields, traj.mass_log))\
        if math.isfinite(r_cut) else True
    write_json(cfg, out / "virial.json", {
        "rows": [dict(zip(("t", "d2_virial", "eight_kinetic"), r)) for r in rows],
        "free_flow_worst_rel": worst if traj.config.mu == 0 else None,
        "cutoff_bound_ok": bound_ok})
    if cfg["format"] == "csv":
        write_csv(cfg, out / "virial.csv", ["t", "d2_virial", "eight_kinetic"], rows)
    return (ok and bound_ok), {"worst_rel": worst}


def _diag_kinetic_localization(cfg, traj, spec, out):
    eta_frac = spec.get("eta_fraction", 1e-2)
    rows = []
    for i, t in enumerate(traj.times):
        f = traj.fields[i]
        total = core.gradient_norm_sq(f)
        rows.append((t, diagnostics.kinetic_localization_radius(f, eta_frac * total)))
    radii = [r for _, r in rows]
    spread_cells = _cell_spread(traj.grid, radii)
    write_json(cfg, out / "kinetic_localization.json",
               {"rows": [{"t": t, "radius": r} for t, r in rows],
                "spread_cells": spread_cells})
    if cfg["format"] == "csv":
        write_csv(cfg, out / "kinetic_localization.csv", ["t", "radius"], rows)
    return spread_cells <= 1, {"spread_cells": spread_cells}


def _cell_spread(grid, radii) -> int:
    idx = [int(np.argmin(np.abs(grid.r - r))) for r in radii]
    return max(idx) - min(idx)


def _diag_concentration(cfg, traj, spec, out):
    eta_frac = spec.get("eta_fraction", 1e-2)
    rows = []
    for i, t in enumerate(traj.times):
        f = traj.fields[i]
        rep = diagnostics.concentration_radii(f, eta_frac * core.mass(f), t=t)
        rows.append((t, rep.c_x, rep.c_xi))
    write_json(cfg, out / "concentration.json",
               {"rows": [dict(zip(("t", "c_x", "c_xi"), r)) for r in rows]})
    if cfg["format"] == "csv":
        write_csv(cfg, out / "concentration.csv", ["t", "c_x", "c_xi"], rows)
    return True, {"snapshots": len(rows)}


DIAGNOSTIC_RUNNERS = {
    "virial": _diag_virial,
    "kinetic_localization": _diag_kinetic_localization,
    "concentration": _diag_concentration,
    "frequency_decay": _diag_frequency_decay,
    "spatial_decay": _diag_spatial_decay,
}


def cmd_diagnose(cfg: dict, trajectory_path: str) -> int:
    out = output_dir(cfg)
    try:
        traj = fieldio.load_trajectory(trajectory_path)
    except FileNotFoundError as exc:
        raise OSError(f"trajectory not found: {exc}") from exc
    specs = cfg["diagnostics"] or [{"kind": "virial"}]
    failures = []
    summary = {}
    for spec in specs:
        kind = spec.get("kind")
        if kind not in DIAGNOSTIC_RUNNERS:
            raise ConfigError(f"unknown diagnostic kind {kind!r} "
                              f"(have {sorted(DIAGNOSTIC_RUNNERS)})")
        passed, detail = DIAGNOSTIC_RUNNERS[kind](cfg, traj, spec, out)
        summary[kind] = {"passed": passed, **detail}
        print(f"diagnose {kind}: {'pass' if passed else 'FAIL'} {detail}")
        if not passed:
            failures.append(kind)
    write_json(cfg, out / "diagnose_summary.json", {"results": summary, "failures": failures})
    if failures:
        raise CheckFailed(f"diagnostics failed: {failures}")
    return EXIT_OK


def cmd_lemma(cfg: dict) -> int:
    out = output_dir(cfg)
    spec = cfg.get("lemma")
    if not spec or "params" not in spec:
        raise ConfigError("lemma command needs config key 'lemma' with 'params'")
    try:
        params = recurrence.RecurrenceParams(**spec["params"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad lemma params: {exc}") from exc
    seq_spec = spec.get("sequence", {"kind": "synthetic_power", "exponent": params.s,
                                     "ladder": 12})
    kind = seq_spec.get("kind")
    if kind == "synthetic_power":
        k = int(seq_spec.get("ladder", 12))
        scales = tuple(params.m0 * 2.0**j for j in range(k))
        expo = float(seq_spec.get("exponent", params.s))
        seq = recurrence.ASequence(scales, tuple(min(params.a_bound, float(N) ** (-expo))
                                                 for N in scales), "synthetic")
    elif kind == "from_trajectory":
        traj = fieldio.load_trajectory(seq_spec["path"])
        seq = recurrence.extract_A_sequence(traj, seq_spec["Ns"])
    elif kind == "file":
        rows = [ln.split(",") for ln in Path(seq_spec["path"]).read_text().splitlines()
                if ln and not ln.startswith("#") and not ln.startswith("N,")]
        seq = recurrence.ASequence(tuple(float(r[0]) for r in rows),
                                   tuple(float(r[1]) for r in rows), "synthetic")
    else:
        raise ConfigError(f"unknown sequence kind {kind!r}")
    rec = recurrence.check_recurrence(seq, params)
    ctrl = recurrence.verify_recursive_control(seq, params)
    write_json(cfg, out / "lemma_report.json", {
        "recurrence": rec.to_json_obj(),
        "control": ctrl.to_json_obj(),
        "sequence": {"provenance": seq.provenance,
                     "rows": [{"N": s, "A_N": v} for s, v in zip(seq.scales, seq.values)]},
    })
    if cfg["format"] == "csv":
        write_csv(cfg, out / "lemma_table.csv",
                  ["N", "A_N", "rhs", "slack"],
                  [(r[0], r[1], r[3], r[4]) for r in rec.rows])
    verdict = ("inapplicable" if not ctrl.applicable
               else "pass" if ctrl.overall_pass else "FAIL")
    print(f"lemma: {verdict} (minimal C1 = {rec.minimal_c1:.6g})")
    if ctrl.applicable and not ctrl.overall_pass:
        raise CheckFailed("recursive-control conclusion failed on an applicable instance")
    return EXIT_OK


def cmd_selftest(cfg: dict) -> int:
    results = selftest.run_all()
    width = max(len(name) for name, _, _ in results)
    failed = 0
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'pass' if ok else 'FAIL'}  {detail}")
        if not ok:
            failed += 1
    print(f"selftest: {len(results) - failed}/{len(results)} suites green")
    if failed:
        raise CheckFailed(f"{failed} selftest suites failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radnls",
                                description="Radial mass-critical NLS simulator and "
                                            "dyadic-band diagnostics")
    p.add_argument("--config", help="JSON config file (see CONFIG_SCHEMA in radnls.cli)")
    p.add_argument("--output-dir", help="override output directory")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--format", choices=("json", "csv"), help="report format")
    p.add_argument("--dimension", type=int)
    p.add_argument("--mu", type=int, choices=(-1, 0, 1))
    p.add_argument("--r-max", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--cadence", type=int)
    p.add_argument("--tol", type=float)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ground-state", help="solve and certify the ground state")
    sub.add_parser("evolve", help="run the split-step integrator")
    d = sub.add_parser("diagnose", help="run diagnostics over a stored trajectory")
    d.add_argument("trajectory", help="trajectory directory (from evolve)")
    sub.add_parser("lemma", help="recurrence and bootstrap reports")
    sub.add_parser("selftest", help="run every module's invariant suite")
    return p


def _overrides(args: argparse.Namespace) -> dict:
    over: dict = {}
    for key in ("dimension", "mu", "seed", "format", "tol"):
        val = getattr(args, key)
        if val is not None:
            over[key] = val
    if args.output_dir is not None:
        over["output_dir"] = args.output_dir
    grid = {k: v for k, v in (("r_max", args.r_max), ("n", args.n)) if v is not None}
    if grid:
        over["grid"] = grid
    time_over = {k: v for k, v in (("dt", args.dt), ("T", args.T),
                                   ("cadence", args.cadence)) if v is not None}
    if time_over:
        over["time"] = time_over
    return over


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "ground-state":
            return cmd_ground_state(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        if args.command == "diagnose":
            return cmd_diagnose(cfg, args.trajectory)
        if args.command == "lemma":
            return cmd_lemma(cfg)
        if args.command == "selftest":
            return cmd_selftest(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, core.GridResolutionError, ValueError) as exc:
        _emit_error(args, "invalid_input", exc)
        return EXIT_INVALID
    except GuardTripped as exc:
        _emit_error(args, "numerical_guard", exc)
        return EXIT_GUARD
    except evolution.ResolutionLossError as exc:
        _emit_error(args, "numerical_guard", exc)
        return EXIT_GUARD
    except CheckFailed as exc:
        _emit_error(args, "check_failed", exc)
        return EXIT_CHECK_FAILED
    except (OSError, groundstate.GroundStateError) as exc:
        kind = "io_error" if isinstance(exc, OSError) else "certification_failed"
        _emit_error(args, kind, exc)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_CHECK_FAILED


def _emit_error(args, kind: str, exc: Exception) -> None:
    print(json.dumps({"error": kind, "detail": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
