"""Run configuration (TOML).

::

    mode = "simulate"          # simulate | verify | converge | frames
    spec = "two_delta.toml"    # problem file, relative to this file
    output_dir = "out"         # relative to this file
    seed = 0

    [grid]                     # optional if the problem file has one
    half_width = 20.0
    nodes = 1024

    [schedule]
    start = 0.0
    end = 1.0
    slices = 64
    substeps = 4
    sampling = "left"          # left | midpoint
    snapshot_stride = 1        # slices between density snapshots

    [initial]                  # Gaussian packet ...
    center = -5.0
    width = 1.0
    momentum = 2.0
    # state_file = "psi.csv"   # ... or a state file with columns x,re,im

    [tolerances]               # numerical engine
    solve_residual = 1e-12
    eig_residual = 1e-10
    pivot_floor = 1e-300
    oracle_cap = 2048

    [checks]                   # pass/fail thresholds of the verify and frames modes
    unitarity = 1e-10
    cocycle = 1e-12
    inverse = 1e-10
    form_growth = 1e-8
    equivalence = 1e-6
    stability = 1e-8
    oracle = 1e-10
    frame_ratio = 10.0

    [verify]
    trials = 200
    pairs = 50
    stability_samples = 100
    equivalence_nodes = 256
    equivalence_pairs = 20
    inverse_slices = [8, 16, 32, 64]

    [converge]
    slices = [8, 16, 32, 64, 128]
    reference_slices = 1024

    [frames]
    levels = 3
    quad_step = 0.00390625     # coarsest level; halved per level
    comoving_slices_factor = 1

Every section except ``spec`` is optional. Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .hamiltonians import SpatialGrid
from .numkit import Tolerances
from .propagator import GaussianPacket, ProductSchedule, WaveFunction
from .specfile import ConfigError, ProblemFile, check_keys, integer, load_problem, number, parse_grid
from .suite import CheckTolerances, VerifySettings

MODES = ("simulate", "verify", "converge", "frames")


@dataclass(frozen=True)
class InitialState:
    packet: Optional[GaussianPacket] = GaussianPacket()
    state_file: Optional[Path] = None

    def on(self, grid: SpatialGrid) -> WaveFunction:
        if self.state_file is None:
            return self.packet.on(grid)
        from .export import read_state_values

        try:
            x, values = read_state_values(self.state_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"initial.state_file: {exc}") from None
        if x.shape != grid.interior.shape or not np.allclose(x, grid.interior, rtol=0, atol=1e-9 * grid.h):
            raise ConfigError("initial.state_file: nodes do not match the grid interior")
        return WaveFunction(grid, values)


@dataclass(frozen=True)
class ConvergeSettings:
    slices: List[int] = field(default_factory=lambda: [8, 16, 32, 64, 128])
    reference_slices: int = 1024


@dataclass(frozen=True)
class FrameSettings:
    levels: int = 3
    quad_step: Optional[float] = None
    comoving_slices_factor: int = 1


@dataclass(frozen=True)
class RunConfig:
    mode: str
    problem: ProblemFile
    grid: SpatialGrid
    schedule: ProductSchedule
    snapshot_stride: int
    initial: InitialState
    output_dir: Path
    seed: int
    tolerances: Tolerances
    verify: VerifySettings
    converge: ConvergeSettings
    frames: FrameSettings
    source: Path
    overrides: tuple = ()


def _section(data, name, allowed):
    sec = data.get(name, {})
    check_keys(sec, allowed, name)
    return sec


def _int_list(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of integers")
    out = [integer(v, f"{path}[{j}]") for j, v in enumerate(value)]
    if any(v < 1 for v in out):
        raise ConfigError(f"{path}: entries must be positive")
    return out


def _positive_int(value, path):
    v = integer(value, path)
    if v < 1:
        raise ConfigError(f"{path}: must be positive, got {v}")
    return v


def _apply_overrides(tol, checks, overrides):
    """``section.key=value`` strings from the command line."""
    tol_kw, chk_kw = {}, {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol {item}: expected KEY=VALUE")
        section, _, name = key.strip().rpartition(".")
        try:
            num = float(value)
        except ValueError:
            raise ConfigError(f"--tol {key}: not a number: {value!r}") from None
        if section in ("", "tolerances") and name in {f.name for f in dataclasses.fields(Tolerances)}:
            tol_kw[name] = int(num) if name == "oracle_cap" else num
        elif section in ("", "checks") and name in {f.name for f in dataclasses.fields(CheckTolerances)}:
            chk_kw[name] = num
        else:
            raise ConfigError(f"--tol {key}: unknown tolerance")
    return dataclasses.replace(tol, **tol_kw), dataclasses.replace(checks, **chk_kw)


def parse_run_config(data, base_dir: Path, source=Path("<memory>"), mode=None, seed=None,
                     output_dir=None, overrides=()) -> RunConfig:
    check_keys(data, {"mode", "spec", "output_dir", "seed", "grid", "schedule", "initial",
                      "tolerances", "checks", "verify", "converge", "frames"}, "")
    mode = mode or data.get("mode", "simulate")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")
    if "spec" not in data:
        raise ConfigError("spec: missing required key")
    if not isinstance(data["spec"], str):
        raise ConfigError("spec: expected a path string")
    problem = load_problem(base_dir / data["spec"])

    if "grid" in data:
        grid = parse_grid(data["grid"])
    elif problem.grid is not None:
        grid = problem.grid
    else:
        raise ConfigError("grid: missing, and the problem file declares no grid")

    sch = _section(data, "schedule", {"start", "end", "slices", "substeps", "sampling",
                                      "snapshot_stride"})
    a, b = problem.spec.window
    start = number(sch.get("start", a), "schedule.start")
    end = number(sch.get("end", b), "schedule.end")
    for name, v in (("start", start), ("end", end)):
        if not a <= v <= b:
            raise ConfigError(f"schedule.{name}: {v:g} outside the problem window [{a:g}, {b:g}]")
    sampling = sch.get("sampling", "left")
    if sampling not in ("left", "midpoint"):
        raise ConfigError(f"schedule.sampling: expected 'left' or 'midpoint', got {sampling!r}")
    schedule = ProductSchedule(start, end, _positive_int(sch.get("slices", 64), "schedule.slices"),
                               _positive_int(sch.get("substeps", 4), "schedule.substeps"), sampling)
    stride = _positive_int(sch.get("snapshot_stride", 1), "schedule.snapshot_stride")

    ini = _section(data, "initial", {"center", "width", "momentum", "state_file"})
    if "state_file" in ini:
        if set(ini) != {"state_file"}:
            raise ConfigError("initial: give either state_file or packet parameters, not both")
        path = base_dir / str(ini["state_file"])
        if not path.is_file():
            raise ConfigError(f"initial.state_file: {path} does not exist")
        initial = InitialState(None, path)
    else:
        width = number(ini.get("width", 1.0), "initial.width")
        if width <= 0:
            raise ConfigError("initial.width: must be positive")
        initial = InitialState(GaussianPacket(number(ini.get("center", 0.0), "initial.center"), width,
                                              number(ini.get("momentum", 0.0), "initial.momentum")))

    tol_names = {f.name for f in dataclasses.fields(Tolerances)}
    tsec = _section(data, "tolerances", tol_names)
    tol = Tolerances(**{k: (integer(v, f"tolerances.{k}") if k == "oracle_cap"
                            else number(v, f"tolerances.{k}")) for k, v in tsec.items()})
    chk_names = {f.name for f in dataclasses.fields(CheckTolerances)}
    csec = _section(data, "checks", chk_names)
    checks = CheckTolerances(**{k: number(v, f"checks.{k}") for k, v in csec.items()})
    tol, checks = _apply_overrides(tol, checks, overrides)

    vsec = _section(data, "verify", {"trials", "pairs", "stability_samples", "equivalence_nodes",
                                     "equivalence_pairs", "inverse_slices"})
    verify = VerifySettings(
        trials=_positive_int(vsec.get("trials", 200), "verify.trials"),
        pairs=_positive_int(vsec.get("pairs", 50), "verify.pairs"),
        stability_samples=_positive_int(vsec.get("stability_samples", 100), "verify.stability_samples"),
        equivalence_nodes=_positive_int(vsec.get("equivalence_nodes", 256), "verify.equivalence_nodes"),
        equivalence_pairs=_positive_int(vsec.get("equivalence_pairs", 20), "verify.equivalence_pairs"),
        inverse_n=_int_list(vsec.get("inverse_slices", [8, 16, 32, 64]), "verify.inverse_slices"),
        checks=checks,
        engine=tol,
    )

    gsec = _section(data, "converge", {"slices", "reference_slices"})
    conv = ConvergeSettings(_int_list(gsec.get("slices", [8, 16, 32, 64, 128]), "converge.slices"),
                            _positive_int(gsec.get("reference_slices", 1024), "converge.reference_slices"))
    if conv.reference_slices < max(conv.slices):
        raise ConfigError("converge.reference_slices: must be at least the largest entry of slices")

    fsec = _section(data, "frames", {"levels", "quad_step", "comoving_slices_factor"})
    levels = _positive_int(fsec.get("levels", 3), "frames.levels")
    if levels < 2:
        raise ConfigError("frames.levels: need at least 2")
    q = fsec.get("quad_step")
    if q is not None:
        q = number(q, "frames.quad_step")
        if q <= 0:
            raise ConfigError("frames.quad_step: must be positive")
    frames = FrameSettings(levels, q, _positive_int(fsec.get("comoving_slices_factor", 1),
                                                    "frames.comoving_slices_factor"))
    if mode == "frames" and problem.kind != "moving":
        raise ConfigError("mode: frames needs a moving problem file")

    seed_val = seed if seed is not None else integer(data.get("seed", 0), "seed")
    out = Path(output_dir) if output_dir is not None else base_dir / str(data.get("output_dir", "out"))
    return RunConfig(mode, problem, grid, schedule, stride, initial, out, seed_val, tol, verify,
                     conv, frames, Path(source), tuple(overrides))


def load_run_config(path, **kw) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config: {path} is not valid TOML: {exc}") from None
    return parse_run_config(data, path.parent, path, **kw)
