"""On-disk formats: columnar text fields, binary snapshots, trajectory
directories, and the certified ground-state cache.

Binary snapshot layout (little endian):

    8 bytes   magic b"RNLSFLD1"
    u32       dimension d
    u64       node count n
    f64       r_max
    16n bytes complex128 samples

The grid is reconstructed from (d, n, r_max), which determines it exactly, so
a load-save cycle is bit-exact on the samples and metadata.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .core import RadialField, RadialGrid, make_radial_grid
from .evolution import SimulationConfig, Trajectory
from .groundstate import GroundState

MAGIC = b"RNLSFLD1"


def save_field_text(f: RadialField, path) -> None:
    """Columnar text: header comments with grid metadata, then r, Re u, Im u."""
    g = f.grid
    lines = [f"# radnls field  d={g.d} n={g.n} r_max={float(g.r_max)!r}",
             "# r re im"]
    for r, v in zip(g.r, f.values):
        lines.append(f"{float(r)!r} {float(v.real)!r} {float(v.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_field_text(path, grid: RadialGrid | None = None) -> RadialField:
    text = Path(path).read_text().splitlines()
    meta = text[0]
    parts = dict(tok.split("=") for tok in meta.removeprefix("# radnls field").split())
    d, n, r_max = int(parts["d"]), int(parts["n"]), float(parts["r_max"])
    if grid is None:
        grid = make_radial_grid(d, r_max, n)
    elif (grid.d, grid.n, grid.r_max) != (d, n, r_max):
        raise ValueError("text field metadata does not match the supplied grid")
    rows = [ln.split() for ln in text if not ln.startswith("#") and ln.strip()]
    vals = np.array([float(a) + 1j * float(b) for _, a, b in rows])
    return RadialField(grid, vals)


def save_field_binary(f: RadialField, path) -> None:
    g = f.grid
    header = MAGIC + struct.pack("<IQd", g.d, g.n, g.r_max)
    Path(path).write_bytes(header + np.ascontiguousarray(f.values).tobytes())


def load_field_binary(path, grid: RadialGrid | None = None) -> RadialField:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a radnls binary snapshot")
    d, n, r_max = struct.unpack("<IQd", blob[8:8 + 20])
    vals = np.frombuffer(blob[28:], dtype=np.complex128)
    if vals.shape != (n,):
        raise ValueError(f"{path}: truncated snapshot")
    if grid is None:
        grid = make_radial_grid(int(d), float(r_max), int(n))
    elif (grid.d, grid.n, grid.r_max) != (int(d), int(n), float(r_max)):
        raise ValueError("binary field metadata does not match the supplied grid")
    return RadialField(grid, vals)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def save_trajectory(traj: Trajectory, out_dir) -> Path:
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    for i, (t, f) in enumerate(zip(traj.times, traj.fields)):
        save_field_binary(f, out / "snapshots" / f"{i:06d}.rfb")
    cfg_json = json.dumps(vars(traj.config), sort_keys=True)
    manifest = {
        "artifact_version": __version__,
        "config_hash": hashlib.sha256(cfg_json.encode()).hexdigest()[:16],
        "config": vars(traj.config) | {},
        "times": list(traj.times),
        "step_times": list(traj.step_times),
        "mass_log": list(traj.mass_log),
        "energy_log": list(traj.energy_log),
        "guard_event": traj.guard_event,
        "warnings": list(traj.warnings),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return out


def load_trajectory(path) -> Trajectory:
    out = Path(path)
    manifest = json.loads((out / "manifest.json").read_text())
    cfg = SimulationConfig(**manifest["config"])
    traj = Trajectory(config=cfg)
    grid = cfg.make_grid()
    traj.times = list(manifest["times"])
    traj.step_times = list(manifest["step_times"])
    traj.mass_log = list(manifest["mass_log"])
    traj.energy_log = list(manifest["energy_log"])
    traj.guard_event = manifest.get("guard_event")
    traj.warnings = list(manifest.get("warnings", []))
    for i in range(len(traj.times)):
        traj.fields.append(load_field_binary(out / "snapshots" / f"{i:06d}.rfb", grid))
    return traj


# ---------------------------------------------------------------------------
# ground-state cache
# ---------------------------------------------------------------------------

def ground_state_key(grid: RadialGrid, tol: float) -> str:
    h = hashlib.sha256()
    h.update(grid.hash_hex().encode())
    h.update(struct.pack("<d", tol))
    return h.hexdigest()[:24]


def save_ground_state(gs: GroundState, cache_dir, tol: float) -> Path:
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    key = ground_state_key(gs.grid, tol)
    save_field_binary(gs.profile, cache / f"{key}.rfb")
    meta = {
        "dimension": gs.dimension,
        "mass": gs.mass,
        "kinetic": gs.kinetic,
        "residual": gs.residual,
        "mass_shooting": gs.mass_shooting,
        "iterations": gs.iterations,
        "tol": tol,
    }
    (cache / f"{key}.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    return cache / f"{key}.rfb"


def load_ground_state(cache_dir, grid: RadialGrid, tol: float) -> GroundState | None:
    key = ground_state_key(grid, tol)
    cache = Path(cache_dir)
    fld, meta = cache / f"{key}.rfb", cache / f"{key}.json"
    if not (fld.exists() and meta.exists()):
        return None
    info = json.loads(meta.read_text())
    profile = load_field_binary(fld, grid)
    return GroundState(profile=profile, dimension=info["dimension"], mass=info["mass"],
                       kinetic=info["kinetic"], residual=info["residual"],
                       mass_shooting=info["mass_shooting"], iterations=info["iterations"])
