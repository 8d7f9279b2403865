"""Run configuration: INI file, environment overrides, typed builders.

A run is described by a flat INI file with the sections

    [problem]         dim, frequency (omega/2pi), interior box, medium, source
    [discretization]  interior cells per axis, PML points, overlap points,
                      absorption profile exponent and damping
    [partition]       subdomain counts
    [solver]          mode (direct-ddm | gmres-ddm | global-direct), tol,
                      restart, max_iter
    [output]          artifact toggles
    [convergence]     mesh list for the refinement study
    [decay]           partitions, iteration count and fit window
    [pipeline]        counts, n_rhs, n_iter, t0, transfer_cost

Environment variables of the form DIAGSWEEP_<SECTION>_<KEY> override file
values, and explicit overrides (command-line) override both.  Validation
errors carry the file name and line number of the offending key when it came
from the file.  The resolved configuration has a stable SHA-256 hash that the
CLI stamps into every artifact it writes.
"""

from __future__ import annotations

import configparser
import hashlib
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, make_grid
from .media import (
    RasterModel,
    constant_model,
    gaussian_source,
    layered_model,
    load_velocity,
    point_shots,
)
from .partition import Partition, make_partition
from .pipeline import PipelineSpec
from .pml import PmlProfile, tuned_sigma_max

ENV_PREFIX = "DIAGSWEEP_"

_DEFAULTS = {
    "problem": {
        "dim": "2",
        "frequency": "10",
        "interior": "0,1; 0,1",
        "medium": "constant",
        "speed": "1.0",
        "source": "gaussian",
        "center": "0.5, 0.5",
    },
    "discretization": {
        "pml_points": "12",
        "overlap_points": "5",
        "exponent": "2",
        "damping": "24",
    },
    "solver": {"mode": "gmres-ddm", "tol": "1e-6", "restart": "30", "max_iter": "200"},
    "output": {
        "field_dump": "true",
        "quicklook": "true",
        "residual_csv": "true",
        "event_log": "false",
    },
    "decay": {"partitions": "3x3; 1x2", "iterations": "26", "fit_skip": "2", "floor": "1e-13"},
    "pipeline": {"t0": "1.0", "transfer_cost": "0.0"},
}


@dataclass
class RunConfig:
    """Resolved key-value configuration with provenance for diagnostics."""

    values: dict[str, dict[str, str]]
    path: Path | None = None
    _lines: dict[tuple[str, str], int] = field(default_factory=dict, repr=False)

    def _where(self, section: str, key: str) -> str:
        lineno = self._lines.get((section, key))
        if self.path is not None and lineno is not None:
            return f"{self.path}:{lineno}"
        return f"[{section}] {key}"

    def has(self, section: str, key: str) -> bool:
        return key in self.values.get(section, {})

    def get(self, section: str, key: str, default: str | None = None) -> str:
        try:
            return self.values[section][key]
        except KeyError:
            if default is not None:
                return default
            raise ConfigurationError(
                f"missing configuration key [{section}] {key}"
            ) from None

    def _typed(self, section, key, cast, kind, default):
        raw = self.get(section, key, default)
        try:
            return cast(raw)
        except ValueError:
            raise ConfigurationError(
                f"{self._where(section, key)}: expected {kind}, got {raw!r}"
            ) from None

    def getint(self, section, key, default=None):
        return self._typed(section, key, int, "an integer", default)

    def getfloat(self, section, key, default=None):
        return self._typed(section, key, float, "a number", default)

    def getbool(self, section, key, default=None):
        raw = self.get(section, key, default).strip().lower()
        if raw in ("true", "yes", "on", "1"):
            return True
        if raw in ("false", "no", "off", "0"):
            return False
        raise ConfigurationError(
            f"{self._where(section, key)}: expected a boolean, got {raw!r}"
        )

    def getlist(self, section, key, cast=str, default=None):
        raw = self.get(section, key, default)
        items = [t.strip() for t in raw.split(",") if t.strip()]
        try:
            return [cast(t) for t in items]
        except ValueError:
            raise ConfigurationError(
                f"{self._where(section, key)}: bad list entry in {raw!r}"
            ) from None

    def getpairs(self, section, key, default=None):
        """Semicolon-separated list of comma-separated float tuples."""
        raw = self.get(section, key, default)
        out = []
        for part in raw.split(";"):
            part = part.strip()
            if not part:
                continue
            try:
                out.append(tuple(float(t) for t in part.split(",")))
            except ValueError:
                raise ConfigurationError(
                    f"{self._where(section, key)}: bad tuple {part!r}"
                ) from None
        return out

    @property
    def sha256(self) -> str:
        lines = sorted(
            f"{sec}.{key}={val}"
            for sec, kv in self.values.items()
            for key, val in kv.items()
        )
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()

    # -- typed builders -----------------------------------------------------

    @property
    def dim(self) -> int:
        dim = self.getint("problem", "dim")
        if dim not in (2, 3):
            raise ConfigurationError(
                f"{self._where('problem', 'dim')}: dim must be 2 or 3, got {dim}"
            )
        return dim

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.getfloat("problem", "frequency")

    def interior_extents(self) -> tuple[tuple[float, float], ...]:
        pairs = self.getpairs("problem", "interior")
        if len(pairs) != self.dim or any(len(p) != 2 for p in pairs):
            raise ConfigurationError(
                f"{self._where('problem', 'interior')}: need {self.dim} lo,hi pairs"
            )
        return tuple((p[0], p[1]) for p in pairs)

    def interior_cells(self) -> tuple[int, ...]:
        cells = self.getlist("discretization", "interior_cells", int)
        if len(cells) == 1:
            cells = cells * self.dim
        if len(cells) != self.dim or any(c < 1 for c in cells):
            raise ConfigurationError(
                f"{self._where('discretization', 'interior_cells')}: "
                f"need {self.dim} positive cell counts"
            )
        return tuple(cells)

    def build_grid(self, interior_cells: tuple[int, ...] | None = None) -> Grid:
        """Grid covering the interior box plus the global PML collar."""
        cells = interior_cells or self.interior_cells()
        pml = self.getint("discretization", "pml_points")
        extents, counts = [], []
        for (a, b), n in zip(self.interior_extents(), cells):
            h = (b - a) / n
            extents.append((a - pml * h, b + pml * h))
            counts.append(n + 2 * pml + 1)
        return make_grid(extents, counts)

    def partition_counts(self) -> tuple[int, ...]:
        counts = self.getlist("partition", "counts", int)
        if len(counts) != self.dim:
            raise ConfigurationError(
                f"{self._where('partition', 'counts')}: need {self.dim} counts"
            )
        return tuple(counts)

    def build_partition(self, grid: Grid, counts=None) -> Partition:
        return make_partition(
            grid,
            counts or self.partition_counts(),
            self.getint("discretization", "overlap_points"),
            self.getint("discretization", "pml_points"),
        )

    def build_profile(self) -> PmlProfile:
        pml = self.getint("discretization", "pml_points")
        d = self.getint("discretization", "overlap_points")
        exponent = self.getint("discretization", "exponent")
        damping = self.getfloat("discretization", "damping")
        h = min(
            (b - a) / n for (a, b), n in zip(self.interior_extents(), self.interior_cells())
        )
        sigma = tuned_sigma_max(self.omega, pml * h, exponent, damping)
        return PmlProfile(pml, d, sigma, exponent)

    def build_model(self):
        kind = self.get("problem", "medium")
        if kind == "constant":
            return constant_model(self.getfloat("problem", "speed"))
        if kind == "layered":
            depths = self.getlist("problem", "depths", float)
            speeds = self.getlist("problem", "speeds", float)
            return layered_model(tuple(depths), tuple(speeds))
        if kind == "raster":
            return load_velocity(self.get("problem", "raster_path"))
        raise ConfigurationError(
            f"{self._where('problem', 'medium')}: unknown medium {kind!r}"
        )

    def build_source(self, grid: Grid, rng: np.random.Generator | None = None):
        kind = self.get("problem", "source")
        interior = self.interior_extents()
        if kind == "gaussian":
            center = tuple(self.getlist("problem", "center", float))
            return gaussian_source(grid, center, self.omega, interior)
        if kind == "shots":
            return point_shots(grid, self.getpairs("problem", "shots"), interior)
        if kind == "random-shots":
            if rng is None:
                rng = np.random.default_rng(0)
            count = self.getint("problem", "n_shots")
            locs = [
                tuple(rng.uniform(a, b) for a, b in interior) for _ in range(count)
            ]
            return point_shots(grid, locs, interior)
        raise ConfigurationError(
            f"{self._where('problem', 'source')}: unknown source {kind!r}"
        )

    def pipeline_spec(self) -> PipelineSpec:
        counts = tuple(self.getlist("pipeline", "counts", int))
        return PipelineSpec(
            counts,
            self.getint("pipeline", "n_rhs"),
            self.getint("pipeline", "n_iter"),
            self.getfloat("pipeline", "t0"),
            self.getfloat("pipeline", "transfer_cost"),
        )

    def decay_partitions(self) -> list[tuple[int, ...]]:
        out = []
        for token in self.get("decay", "partitions").split(";"):
            token = token.strip()
            if not token:
                continue
            try:
                out.append(tuple(int(t) for t in token.split("x")))
            except ValueError:
                raise ConfigurationError(
                    f"{self._where('decay', 'partitions')}: bad partition {token!r}"
                ) from None
        return out


def _key_lines(path: Path) -> dict[tuple[str, str], int]:
    lines = {}
    section = None
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]\s*$", stripped)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;][^=:]*)[=:]", stripped)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = lineno
    return lines


def load_config(
    path=None, environ=None, overrides: dict[str, str] | None = None
) -> RunConfig:
    """Resolve defaults <- file <- environment <- explicit overrides.

    `overrides` maps "section.key" to values.  Environment variables use the
    form DIAGSWEEP_<SECTION>_<KEY> (section and key upper-cased).
    """
    values = {sec: dict(kv) for sec, kv in _DEFAULTS.items()}
    key_lines: dict[tuple[str, str], int] = {}
    path = Path(path) if path is not None else None
    if path is not None:
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        for section in parser.sections():
            values.setdefault(section, {}).update(parser.items(section))
        key_lines = _key_lines(path)
    environ = os.environ if environ is None else environ
    known = {sec.upper(): sec for sec in values} | {
        sec.upper(): sec for sec in _DEFAULTS
    }
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        for sec_upper, sec in known.items():
            if rest.startswith(sec_upper + "_"):
                key = rest[len(sec_upper) + 1 :].lower()
                values.setdefault(sec, {})[key] = value
                break
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigurationError(f"override {dotted!r} is not section.key")
        section, key = dotted.split(".", 1)
        values.setdefault(section, {})[key] = value
    return RunConfig(values, path, key_lines)
