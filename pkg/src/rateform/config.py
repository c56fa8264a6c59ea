"""Line-based `key = value` configuration with strict validation.

Sections are [grid], [material], [solver], [forcing] and [scenario];
`#` starts a comment. Unknown sections or keys are hard errors, duplicate
keys report their line number, and every numeric parse is checked.
"""

from dataclasses import dataclass, field

import numpy as np

from . import grid as gridmod
from .errors import MissingRequired, ParseError, UnknownKey
from .evolution import SolverConfig
from .grid import BodyForce, StructuredGrid
from .laws import (
    IsotropicLaw,
    LAW_TAGS,
    MaterialParams,
    det_normalized_example,
    mooney_log,
    neo_hooke_exp,
    neo_hooke_quad,
)

_SCHEMA = {
    "grid": ("nx", "ny", "nz", "origin", "extent"),
    "material": ("law", "mu", "lambda", "kappa"),
    "solver": ("dt", "steps", "cfl", "picard_sweeps", "cg_tol", "cg_max_factor",
               "mode", "snapshot_every"),
    "forcing": ("preset", "amplitude", "period"),
    "scenario": ("phi0", "bump_amplitude", "f11", "f12", "f13", "f21", "f22", "f23",
                 "f31", "f32", "f33", "field", "coeff", "t_final", "dt",
                 "seeds_per_axis"),
}

_DEFAULTS = {
    ("grid", "nx"): "8",
    ("grid", "ny"): "8",
    ("grid", "nz"): "8",
    ("grid", "origin"): "0 0 0",
    ("grid", "extent"): "1 1 1",
    ("material", "law"): "mooney_log",
    ("material", "mu"): "1.0",
    ("material", "lambda"): "2.0",
    ("solver", "dt"): "0.001",
    ("solver", "steps"): "100",
    ("solver", "cfl"): "0.5",
    ("solver", "picard_sweeps"): "2",
    ("solver", "cg_tol"): "1e-10",
    ("solver", "cg_max_factor"): "10",
    ("solver", "mode"): "induced",
    ("solver", "snapshot_every"): "0",
    ("forcing", "preset"): "zero",
    ("scenario", "phi0"): "identity",
    ("scenario", "bump_amplitude"): "0.02",
    ("scenario", "field"): "linear",
    ("scenario", "coeff"): "0.3",
    ("scenario", "t_final"): "1.0",
    ("scenario", "dt"): "0.05",
    ("scenario", "seeds_per_axis"): "2",
}
for _i in range(1, 4):
    for _j in range(1, 4):
        _DEFAULTS[("scenario", f"f{_i}{_j}")] = "1" if _i == _j else "0"


def _parse_sections(text):
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise UnknownKey(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ParseError("expected `key = value`", line=lineno)
        if section is None:
            raise ParseError("key outside any section", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA[section]:
            raise UnknownKey(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in values:
            raise ParseError(f"duplicate key {key!r} in [{section}]", line=lineno)
        if not value:
            raise ParseError(f"empty value for {key!r}", line=lineno)
        values[(section, key)] = value
    return values


def _get(values, section, key, required=False):
    if (section, key) in values:
        return values[(section, key)]
    if (section, key) in _DEFAULTS:
        return _DEFAULTS[(section, key)]
    if required:
        raise MissingRequired(f"[{section}] {key} is required")
    return None


def _as_float(section, key, s):
    try:
        return float(s)
    except ValueError:
        raise ParseError(f"[{section}] {key}: not a number: {s!r}") from None


def _as_int(section, key, s):
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"[{section}] {key}: not an integer: {s!r}") from None


def _as_vec3(section, key, s):
    parts = s.split()
    if len(parts) != 3:
        raise ParseError(f"[{section}] {key}: expected three numbers, got {s!r}")
    return tuple(_as_float(section, key, p) for p in parts)


@dataclass
class RunConfig:
    grid: StructuredGrid
    law: IsotropicLaw
    params: MaterialParams
    solver: SolverConfig
    forcing: BodyForce
    phi0: object
    scenario: dict
    echo: list = field(default_factory=list)


def make_law(tag, params: MaterialParams) -> IsotropicLaw:
    if tag == "mooney_log":
        return mooney_log(params)
    if tag == "neo_hooke_exp":
        return neo_hooke_exp(params)
    if tag == "neo_hooke_quad":
        return neo_hooke_quad(params)
    if tag == "det_normalized_example":
        return det_normalized_example(params)
    raise UnknownKey(f"law must be one of {LAW_TAGS}, got {tag!r}")


def parse_config(text) -> RunConfig:
    values = _parse_sections(text)

    shape = tuple(_as_int("grid", k, _get(values, "grid", k)) for k in ("nx", "ny", "nz"))
    grid = StructuredGrid(
        origin=_as_vec3("grid", "origin", _get(values, "grid", "origin")),
        extent=_as_vec3("grid", "extent", _get(values, "grid", "extent")),
        shape=shape,
    )

    law_tag = _get(values, "material", "law")
    kappa_s = _get(values, "material", "kappa")
    params = MaterialParams(
        mu=_as_float("material", "mu", _get(values, "material", "mu")),
        lam=_as_float("material", "lambda", _get(values, "material", "lambda")),
        kappa=_as_float("material", "kappa", kappa_s) if kappa_s is not None else None,
    )
    law = make_law(law_tag, params)

    solver = SolverConfig(
        dt=_as_float("solver", "dt", _get(values, "solver", "dt")),
        steps=_as_int("solver", "steps", _get(values, "solver", "steps")),
        cfl=_as_float("solver", "cfl", _get(values, "solver", "cfl")),
        picard_sweeps=_as_int("solver", "picard_sweeps", _get(values, "solver", "picard_sweeps")),
        cg_tol=_as_float("solver", "cg_tol", _get(values, "solver", "cg_tol")),
        cg_max_factor=_as_int("solver", "cg_max_factor", _get(values, "solver", "cg_max_factor")),
        mode=_get(values, "solver", "mode"),
        snapshot_every=_as_int("solver", "snapshot_every",
                               _get(values, "solver", "snapshot_every")),
    )

    preset = _get(values, "forcing", "preset")
    if preset == "zero":
        forcing = gridmod.zero_forcing()
    elif preset in ("constant", "ramp", "pulse", "sine"):
        amp_s = _get(values, "forcing", "amplitude")
        if amp_s is None:
            raise MissingRequired(f"[forcing] amplitude is required for preset {preset}")
        amp = _as_vec3("forcing", "amplitude", amp_s)
        if preset == "constant":
            forcing = gridmod.constant_forcing(amp)
        elif preset == "ramp":
            forcing = gridmod.ramp_forcing(amp)
        elif preset == "sine":
            forcing = gridmod.sine_forcing(amp, grid.origin, grid.extent)
        else:
            period_s = _get(values, "forcing", "period")
            if period_s is None:
                raise MissingRequired("[forcing] period is required for preset pulse")
            forcing = gridmod.pulse_forcing(amp, _as_float("forcing", "period", period_s))
    else:
        raise UnknownKey(f"unknown forcing preset {preset!r}")

    phi0_tag = _get(values, "scenario", "phi0")
    if phi0_tag == "identity":
        phi0 = gridmod.identity_map()
    elif phi0_tag == "affine":
        F0 = np.array(
            [[_as_float("scenario", f"f{i}{j}", _get(values, "scenario", f"f{i}{j}"))
              for j in (1, 2, 3)] for i in (1, 2, 3)]
        )
        phi0 = gridmod.affine_map(F0)
    elif phi0_tag == "sine_bump":
        amp = _as_float("scenario", "bump_amplitude",
                        _get(values, "scenario", "bump_amplitude"))
        phi0 = gridmod.sine_bump_map(amp, grid.origin, grid.extent)
    else:
        raise UnknownKey(f"unknown phi0 preset {phi0_tag!r}")

    scenario = {
        "phi0": phi0_tag,
        "field": _get(values, "scenario", "field"),
        "coeff": _as_float("scenario", "coeff", _get(values, "scenario", "coeff")),
        "t_final": _as_float("scenario", "t_final", _get(values, "scenario", "t_final")),
        "dt": _as_float("scenario", "dt", _get(values, "scenario", "dt")),
        "seeds_per_axis": _as_int("scenario", "seeds_per_axis",
                                  _get(values, "scenario", "seeds_per_axis")),
    }

    # normalized echo, defaults included, for reproducible run reports
    echo = []
    for section in _SCHEMA:
        for key in _SCHEMA[section]:
            v = values.get((section, key), _DEFAULTS.get((section, key)))
            if v is not None:
                echo.append((section, key, v))

    return RunConfig(
        grid=grid, law=law, params=params, solver=solver, forcing=forcing,
        phi0=phi0, scenario=scenario, echo=echo,
    )
