"""TOML problem files.

A problem file declares one family of Hamiltonians. Unknown keys are errors.

Static points (``kind = "static"``)::

    kind = "static"

    [window]              # time window on which the profiles are valid
    start = 0.0
    end = 10.0

    [grid]                # optional default grid
    half_width = 20.0
    nodes = 1024

    [mass]                # profile over x, default constant 0.5
    kind = "constant"
    value = 0.5

    [potential]           # profile over x, default constant 0
    kind = "constant"
    value = 0.0

    [points]
    positions = [-2.0, 2.0]
    lipschitz = 1.0       # optional; sampled estimate when absent

    [[couplings]]         # one profile over t per point
    kind = "expr"
    terms = [{type = "poly", coeffs = [1.5]}, {type = "cos", amp = -0.5, freq = 2.0}]

    [[couplings]]
    kind = "constant"
    value = 2.0

Two moving points (``kind = "moving"``)::

    kind = "moving"

    [window]
    start = 0.0
    end = 1.0

    [trajectories]
    x1 = {kind = "poly", coeffs = [-1.0, -0.1]}
    x2 = {kind = "poly", coeffs = [1.0, 0.1]}
    x_floor = 1e-6        # optional

    [[couplings]]         # exactly two: kappa1, kappa2
    kind = "constant"
    value = 1.0

    [[couplings]]
    kind = "constant"
    value = 1.0

Profile tables take ``kind`` = ``constant`` (``value``), ``table``
(``knots``, ``values``), ``poly`` (ascending ``coeffs``) or ``expr``
(``terms``: list of ``{type = poly|sin|cos|exp, ...}``; ``sin``/``cos`` take
``amp``, ``freq``, optional ``phase``; ``exp`` takes ``amp``, ``rate``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .hamiltonians import MovingDeltaSpec, SpatialGrid, StaticDeltaFamilySpec
from .profiles import ScalarProfile, constant


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


def check_keys(data, allowed, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a table")
    extra = sorted(set(data) - set(allowed))
    if extra:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{extra[0]}: unknown key")


def require(data, key, path):
    if key not in data:
        raise ConfigError(f"{path}.{key}: missing required key" if path else f"{key}: missing required key")
    return data[key]


def number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _profile(data, path):
    try:
        return ScalarProfile.from_dict(data, path)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_grid(data, path="grid"):
    check_keys(data, {"half_width", "nodes"}, path)
    try:
        return SpatialGrid(number(require(data, "half_width", path), f"{path}.half_width"),
                           integer(require(data, "nodes", path), f"{path}.nodes"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _window(data):
    check_keys(data, {"start", "end"}, "window")
    return (number(require(data, "start", "window"), "window.start"),
            number(require(data, "end", "window"), "window.end"))


@dataclass(frozen=True)
class ProblemFile:
    spec: Union[StaticDeltaFamilySpec, MovingDeltaSpec]
    grid: Optional[SpatialGrid]
    source: str

    @property
    def kind(self):
        return "static" if isinstance(self.spec, StaticDeltaFamilySpec) else "moving"


def parse_problem(data, source="<memory>") -> ProblemFile:
    kind = require(data, "kind", "")
    grid = parse_grid(data["grid"]) if "grid" in data else None
    window = _window(require(data, "window", ""))
    couplings = require(data, "couplings", "")
    if not isinstance(couplings, list):
        raise ConfigError("couplings: expected an array of tables ([[couplings]])")
    kappas = [_profile(c, f"couplings[{j}]") for j, c in enumerate(couplings)]
    try:
        if kind == "static":
            check_keys(data, {"kind", "window", "grid", "mass", "potential", "points", "couplings"}, "")
            pts = require(data, "points", "")
            check_keys(pts, {"positions", "lipschitz"}, "points")
            positions = [number(p, f"points.positions[{j}]")
                         for j, p in enumerate(require(pts, "positions", "points"))]
            lip = pts.get("lipschitz")
            if len(positions) != len(kappas):
                raise ConfigError(
                    f"couplings: {len(kappas)} profiles for {len(positions)} points")
            spec = StaticDeltaFamilySpec(
                points=positions,
                couplings=kappas,
                mass=_profile(data["mass"], "mass") if "mass" in data else constant(0.5),
                potential=_profile(data["potential"], "potential") if "potential" in data else constant(0.0),
                lipschitz=None if lip is None else number(lip, "points.lipschitz"),
                window=window,
            )
        elif kind == "moving":
            check_keys(data, {"kind", "window", "grid", "trajectories", "couplings"}, "")
            tr = require(data, "trajectories", "")
            check_keys(tr, {"x1", "x2", "x_floor"}, "trajectories")
            if len(kappas) != 2:
                raise ConfigError(f"couplings: moving problems need exactly 2 profiles, got {len(kappas)}")
            spec = MovingDeltaSpec(
                x1=_profile(require(tr, "x1", "trajectories"), "trajectories.x1"),
                x2=_profile(require(tr, "x2", "trajectories"), "trajectories.x2"),
                kappa1=kappas[0],
                kappa2=kappas[1],
                window=window,
                x_floor=number(tr.get("x_floor", 1e-6), "trajectories.x_floor"),
            )
        else:
            raise ConfigError(f"kind: expected 'static' or 'moving', got {kind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{kind or 'spec'}: {exc}") from None
    if kind == "static" and grid is not None:
        if "mass" in data:
            m = spec.mass
            lo = m.inf(-grid.half_width, grid.half_width, extra=grid.nodes)
            if lo <= 0:
                raise ConfigError("mass: must be positive on the grid")
    return ProblemFile(spec, grid, source)


def load_problem(path) -> ProblemFile:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"spec: cannot read {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"spec: {path} is not valid TOML: {exc}") from None
    return parse_problem(data, str(path))
