"""Run configuration files and initial-state plumbing.

The format is flat sectioned ``key = value`` text with exactly the sections
``[system]``, ``[grid]``, ``[integrator]``, ``[data]``, and ``[output]``.
Every key the selected system and data kind require is mandatory, and unknown
keys are rejected; reproducibility beats convenience here, so nothing
physical has a default.  Parse-level problems (bad section headers, stray
lines) are reported with the offending line number.

The ``[data]`` section selects one of three initial-state sources:

``random``
    Admissible random data from the seeded generator, shaped by the envelope
    peak ``xi0``; the mode cutoff is the largest band whose triple products
    stay inside the retained band.
``single-mode``
    One cosine mode of the scalar field at integer mode index ``xi0``
    (comma-separated), everything else zero.  Such data is admissible since
    a real-valued scalar with zero velocity carries no charge.
``file``
    A state written by ``write_state_files``: one snapshot file per
    component under a common path prefix.  The loaded state restarts the
    clock at time zero.  The run entry point re-checks admissibility, so
    restart from a decomposed-formulation final state (which keeps the
    constraint at roundoff); raw-formulation finals carry an O(dt^2)
    residual and are rejected.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .evolve import IntegratorConfig
from .gauge import SpectrumProfile, make_admissible_mcsh, make_admissible_mkg
from .mcsh import McshState, PhysParams
from .mkg import MkgState
from .snapshots import read_field, write_field
from .spectral import Grid, SpectralField, VectorField

SYSTEMS = ("mkg", "mcsh")
DATA_KINDS = ("random", "single-mode", "file")
OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """A configuration file that cannot be turned into a run."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one batch run needs, decoded and validated."""

    system: str
    grid: Grid
    p: PhysParams | None
    integrator: IntegratorConfig
    data: dict
    outdir: str
    formats: tuple

    def initial_state(self):
        """Build the initial state of the configured data source."""
        kind = self.data["kind"]
        if kind == "random":
            profile = SpectrumProfile(xi0=self.data["xi0"])
            if self.system == "mkg":
                return make_admissible_mkg(self.grid, seed=self.data["seed"],
                                           amplitude=self.data["amplitude"],
                                           profile=profile)
            return make_admissible_mcsh(self.grid, seed=self.data["seed"], p=self.p,
                                        amplitude=self.data["amplitude"],
                                        profile=profile)
        if kind == "single-mode":
            return _single_mode_state(self.system, self.grid, self.data["xi0"])
        return read_state_files(self.data["path"], self.system, self.grid)


def _single_mode_state(system: str, grid: Grid, index: tuple):
    c = np.zeros(grid.shape, complex)
    c[index] = 0.5
    c[tuple(-i for i in index)] += 0.5
    phi = SpectralField(grid, c, False)
    dphi = SpectralField.zero(grid, real=False)
    if system == "mkg":
        return MkgState(VectorField.zero(grid), VectorField.zero(grid), phi, dphi)
    return McshState(VectorField.zero(grid), VectorField.zero(grid), phi, dphi,
                     SpectralField.zero(grid), SpectralField.zero(grid))


# ---------------------------------------------------------------------------
# state snapshots (one field container file per component)
# ---------------------------------------------------------------------------

_MKG_COMPONENTS = ("A0", "A1", "A2", "dA0", "dA1", "dA2", "phi", "dphi")
_MCSH_COMPONENTS = ("A0", "A1", "dA0", "dA1", "phi", "dphi", "N", "dN")


def _state_components(state) -> dict:
    out = {}
    for i, comp in enumerate(state.A):
        out[f"A{i}"] = comp
    for i, comp in enumerate(state.dA):
        out[f"dA{i}"] = comp
    out["phi"] = state.phi
    out["dphi"] = state.dphi
    if isinstance(state, McshState):
        out["N"] = state.n_tilde
        out["dN"] = state.dn_tilde
    return out


def write_state_files(state, prefix: str) -> list:
    """Write every component of ``state`` as ``<prefix>.<name>.field``."""
    paths = []
    for name, comp in _state_components(state).items():
        path = f"{prefix}.{name}.field"
        write_field(path, comp, name)
        paths.append(path)
    return paths


def read_state_files(prefix: str, system: str, grid: Grid):
    """Load a state written by :func:`write_state_files`; time restarts at 0."""
    names = _MKG_COMPONENTS if system == "mkg" else _MCSH_COMPONENTS
    fields = {}
    for name in names:
        path = f"{prefix}.{name}.field"
        if not os.path.exists(path):
            raise ConfigError(f"missing state component file {path}")
        field, stored = read_field(path)
        if stored != name:
            raise ConfigError(f"{path}: holds field {stored!r}, expected {name!r}")
        if field.grid != grid:
            raise ConfigError(f"{path}: grid does not match the [grid] section")
        fields[name] = field
    dim = grid.dim
    A = VectorField(tuple(fields[f"A{i}"] for i in range(dim)))
    dA = VectorField(tuple(fields[f"dA{i}"] for i in range(dim)))
    if system == "mkg":
        return MkgState(A, dA, fields["phi"], fields["dphi"])
    return McshState(A, dA, fields["phi"], fields["dphi"], fields["N"], fields["dN"])


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "system": {"name"},
    "grid": {"n", "box_length"},
    "integrator": {"scheme", "dt", "t_final", "snapshot_every", "formulation",
                   "regauge_every"},
    "data": {"kind"},
    "output": {"directory", "formats"},
}
_MCSH_KEYS = {"e", "kappa", "v"}
_DATA_KEYS = {
    "random": {"seed", "xi0", "amplitude"},
    "single-mode": {"xi0"},
    "file": {"path"},
}


class _Section:
    """One validated section: typed getters that consume keys."""

    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = dict(items)

    def _take(self, key: str) -> str:
        if key not in self.items:
            raise ConfigError(f"[{self.name}] is missing the key {key!r}")
        return self.items.pop(key)

    def string(self, key: str, allowed=None) -> str:
        val = self._take(key).strip()
        if allowed is not None and val not in allowed:
            raise ConfigError(
                f"[{self.name}] {key} = {val!r} is not one of {sorted(allowed)}")
        return val

    def integer(self, key: str) -> int:
        raw = self._take(key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not an integer") from None

    def number(self, key: str) -> float:
        raw = self._take(key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number") from None

    def reject_leftovers(self):
        if self.items:
            extra = ", ".join(sorted(self.items))
            raise ConfigError(f"[{self.name}] has unknown keys: {extra}")


def _parse_sections(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: line outside any section") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"{path}:{lineno}: malformed line") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: duplicate key {exc.option!r}") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: duplicate section") from None
    found = set(parser.sections())
    want = set(_SECTION_KEYS)
    if found != want:
        missing = ", ".join(sorted(want - found))
        extra = ", ".join(sorted(found - want))
        parts = []
        if missing:
            parts.append(f"missing sections: {missing}")
        if extra:
            parts.append(f"unknown sections: {extra}")
        raise ConfigError(f"{path}: " + "; ".join(parts))
    return {name: _Section(name, parser[name]) for name in parser.sections()}


def load_config(path: str) -> RunConfig:
    """Parse and validate one configuration file."""
    sec = _parse_sections(path)

    system = sec["system"].string("name", allowed=set(SYSTEMS))
    p = None
    if system == "mcsh":
        p = PhysParams(e=sec["system"].number("e"),
                       kappa=sec["system"].number("kappa"),
                       v=sec["system"].number("v"))
    sec["system"].reject_leftovers()

    dim = 3 if system == "mkg" else 2
    try:
        grid = Grid(dim, sec["grid"].integer("n"), sec["grid"].number("box_length"))
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    sec["grid"].reject_leftovers()

    regauge = sec["integrator"].integer("regauge_every")
    try:
        integ = IntegratorConfig(
            dt=sec["integrator"].number("dt"),
            t_final=sec["integrator"].number("t_final"),
            scheme=sec["integrator"].string("scheme"),
            snapshot_every=sec["integrator"].integer("snapshot_every"),
            formulation=sec["integrator"].string("formulation"),
            regauge_every=regauge if regauge > 0 else None,
        )
        integ.n_steps()
        integ.check_cfl(grid)
    except ValueError as exc:
        raise ConfigError(f"[integrator] {exc}") from None
    sec["integrator"].reject_leftovers()

    kind = sec["data"].string("kind", allowed=set(DATA_KINDS))
    data = {"kind": kind}
    if kind == "random":
        data["seed"] = sec["data"].integer("seed")
        data["xi0"] = sec["data"].number("xi0")
        data["amplitude"] = sec["data"].number("amplitude")
        if data["xi0"] <= 0 or data["amplitude"] <= 0:
            raise ConfigError("[data] xi0 and amplitude must be positive")
    elif kind == "single-mode":
        data["xi0"] = _parse_mode_index(sec["data"].string("xi0"), grid)
    else:
        data["path"] = sec["data"].string("path")
    sec["data"].reject_leftovers()

    outdir = sec["output"].string("directory")
    formats = tuple(part.strip()
                    for part in sec["output"].string("formats").split(","))
    if not formats or any(f not in OUTPUT_FORMATS for f in formats):
        raise ConfigError(f"[output] formats must be a comma list from "
                          f"{sorted(OUTPUT_FORMATS)}")
    sec["output"].reject_leftovers()

    return RunConfig(system=system, grid=grid, p=p, integrator=integ,
                     data=data, outdir=outdir, formats=formats)


def _parse_mode_index(raw: str, grid: Grid) -> tuple:
    parts = [part.strip() for part in raw.split(",")]
    if len(parts) != grid.dim:
        raise ConfigError(f"[data] xi0 needs {grid.dim} comma-separated integers")
    try:
        index = tuple(int(part) for part in parts)
    except ValueError:
        raise ConfigError(f"[data] xi0 = {raw!r} is not an integer tuple") from None
    limit = grid.n // 2 - 1
    if any(abs(i) > limit for i in index):
        raise ConfigError(f"[data] mode index {index} outside the retained band "
                          f"(|component| <= {limit})")
    return index
