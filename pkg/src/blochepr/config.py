"""JSON device configuration: parsing, validation and default resolution.

A configuration document looks like::

    {
      "lattice":   {"num_sites": 16, "coupling": 0.45, "diag_offset": 0.0},
      "geometry":  {"effective_index": 1.45, "spacing": 17, "wavelength": 815},
      "coupler":   {"coupling": 0.45, "phase": 0.0},
      "input":     {"type": "epr", "sites": [7, 8]},
      "run":       {"fractions": [0.1, 0.2, 0.3, 0.4], "device_length": 6.0},
      "detection": {"pair_rate": 12.0, "seed": 0},
      "output":    "runs/symmetric"
    }

Every error names the dotted path of the offending field. A run manifest
(which embeds its resolved configuration under ``"config"``) is accepted
wherever a configuration is.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import coupler as dc
from .device import SOURCES, Device
from .errors import BlochEPRError, ConfigError
from .lattice import GeometrySpec
from .noise import DetectionConfig

MANIFEST_TOOL = "blochepr"
DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4)
DEFAULT_RESAMPLES = 1000

_SECTIONS = {"lattice", "geometry", "coupler", "input", "run", "detection", "output"}
_LATTICE = {"num_sites", "coupling", "diag_offset"}
_GEOMETRY = {"effective_index", "spacing", "wavelength", "curvature_radius", "device_length"}
_COUPLER = {"coupling", "phase", "detuning"}
_INPUT = {"type", "sites", "phase"}
_RUN = {"fractions", "device_length", "resamples"}
_DETECTION = {
    "pair_rate", "integration", "window", "accidental_rate",
    "efficiencies", "diagonal_split", "seed",
}


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved configuration; every default is explicit."""

    num_sites: int
    coupling: float
    diag_offset: float
    coupler_coupling: float
    coupler_key: str  # "phase" or "detuning": whichever the document gave
    coupler_value: float
    source: str
    sites: tuple
    fractions: tuple
    device_length: float
    resamples: int
    detection: DetectionConfig
    geometry: Optional[GeometrySpec] = None
    output: Optional[str] = field(default=None, compare=False)

    @property
    def phase(self) -> float:
        if self.coupler_key == "phase":
            return self.coupler_value
        return dc.phase_of_detuning(self.coupler_value, self.coupler_coupling)

    @property
    def detuning(self) -> float:
        if self.coupler_key == "detuning":
            return self.coupler_value
        return dc.detuning_for_phase(self.coupler_value, self.coupler_coupling)

    def device(self) -> Device:
        return Device(
            num_sites=self.num_sites,
            coupling=self.coupling,
            length=self.device_length,
            source=self.source,
            phase=self.phase,
            feed=self.sites[0],
            coupler_coupling=self.coupler_coupling,
            diag_offset=self.diag_offset,
        )

    def to_document(self) -> dict:
        """Canonical JSON form; parsing it gives back an equal RunConfig."""
        det = asdict(self.detection)
        det["efficiencies"] = None if det["efficiencies"] is None else list(det["efficiencies"])
        doc = {
            "lattice": {
                "num_sites": self.num_sites,
                "coupling": self.coupling,
                "diag_offset": self.diag_offset,
            },
            "coupler": {"coupling": self.coupler_coupling, self.coupler_key: self.coupler_value},
            "input": {"type": self.source, "sites": list(self.sites)},
            "run": {
                "fractions": list(self.fractions),
                "device_length": self.device_length,
                "resamples": self.resamples,
            },
            "detection": det,
        }
        if self.geometry is not None:
            geo = asdict(self.geometry)
            if math.isinf(geo["curvature_radius"]):
                del geo["curvature_radius"]  # straight guides: the default
            doc["geometry"] = geo
        return doc


def _section(doc, name, allowed, required=False):
    if name not in doc:
        if required:
            raise ConfigError(name, "section is required")
        return None
    sec = doc[name]
    if not isinstance(sec, dict):
        raise ConfigError(name, f"expected an object, got {type(sec).__name__}")
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown field")
    return sec


def _number(sec, name, key, default=None, *, integer=False, check=None, why=""):
    path = f"{name}.{key}"
    if sec is None or key not in sec:
        if default is None:
            raise ConfigError(path, "field is required")
        return default
    value = sec[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(path, f"must be finite, got {value!r}")
    if check is not None and not check(value):
        raise ConfigError(path, f"{why}, got {value!r}")
    return value


def parse_fractions(values, path="run.fractions") -> tuple:
    if isinstance(values, str):
        try:
            values = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(path, f"cannot parse fraction list: {exc}") from None
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(path, "expected a non-empty list of fractions")
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}[{i}]", f"expected a number, got {v!r}")
        if not 0.0 < v <= 1.0:
            raise ConfigError(f"{path}[{i}]", f"fraction must lie in (0, 1], got {v!r}")
        out.append(float(v))
    return tuple(out)


def _parse_detection(sec) -> DetectionConfig:
    base = DetectionConfig()
    kw = {}
    for key in ("pair_rate", "integration", "window", "accidental_rate"):
        kw[key] = _number(sec, "detection", key, getattr(base, key), check=lambda x: x >= 0, why="must be >= 0")
    kw["diagonal_split"] = _number(
        sec, "detection", "diagonal_split", base.diagonal_split,
        check=lambda x: 0 < x <= 1, why="must lie in (0, 1]",
    )
    kw["seed"] = _number(
        sec, "detection", "seed", base.seed, integer=True,
        check=lambda x: 0 <= x < 2**64, why="must be an unsigned 64-bit integer",
    )
    eff = None if sec is None else sec.get("efficiencies")
    if eff is not None:
        if not isinstance(eff, list):
            raise ConfigError("detection.efficiencies", "expected a list of numbers")
        for i, x in enumerate(eff):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not 0 < x <= 1:
                raise ConfigError(f"detection.efficiencies[{i}]", f"must lie in (0, 1], got {x!r}")
        eff = tuple(float(x) for x in eff)
    kw["efficiencies"] = eff
    return DetectionConfig(**kw)


def _parse_geometry(sec) -> Optional[GeometrySpec]:
    if sec is None:
        return None
    positive = dict(check=lambda x: x > 0, why="must be > 0")
    kw = {
        "effective_index": _number(sec, "geometry", "effective_index", **positive),
        "spacing": _number(sec, "geometry", "spacing", **positive),
        "wavelength": _number(sec, "geometry", "wavelength", **positive),
    }
    if "curvature_radius" in sec:
        kw["curvature_radius"] = _number(sec, "geometry", "curvature_radius", **positive)
    if "device_length" in sec:
        kw["device_length"] = _number(sec, "geometry", "device_length", **positive)
    return GeometrySpec(**kw)


def parse_config(doc: dict, *, seed=None, fractions=None, output=None) -> RunConfig:
    """Validate ``doc`` and resolve every default; keyword overrides win."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    if doc.get("tool") == MANIFEST_TOOL and "config" in doc:
        doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("config", "manifest config must be an object")
    for key in doc:
        if key not in _SECTIONS:
            raise ConfigError(key, "unknown section")

    lat = _section(doc, "lattice", _LATTICE, required=True)
    n = _number(lat, "lattice", "num_sites", integer=True, check=lambda x: x >= 2, why="must be >= 2")
    c = _number(lat, "lattice", "coupling", check=lambda x: x > 0, why="must be > 0")
    offset = _number(lat, "lattice", "diag_offset", 0.0)

    geometry = _parse_geometry(_section(doc, "geometry", _GEOMETRY))

    cpl = _section(doc, "coupler", _COUPLER) or {}
    cc = _number(cpl, "coupler", "coupling", c, check=lambda x: x > 0, why="must be > 0")
    given = [k for k in ("phase", "detuning") if k in cpl]
    if len(given) > 1:
        raise ConfigError("coupler", "give exactly one of phase / detuning, not both")
    if given == ["detuning"]:
        key = "detuning"
        value = _number(cpl, "coupler", "detuning", check=lambda x: 0 <= x <= 2 * cc, why=f"must lie in [0, {2 * cc}]")
    else:
        key = "phase"
        value = _number(cpl, "coupler", "phase", 0.0, check=lambda x: 0 <= x <= math.pi, why="must lie in [0, pi]")

    inp = _section(doc, "input", _INPUT) or {}
    source = inp.get("type", "epr")
    if source not in SOURCES:
        raise ConfigError("input.type", f"must be one of {SOURCES}, got {source!r}")
    sites = inp.get("sites", [n // 2 - 1, n // 2])
    if (
        not isinstance(sites, list)
        or len(sites) != 2
        or any(isinstance(s, bool) or not isinstance(s, int) for s in sites)
    ):
        raise ConfigError("input.sites", f"expected two integer sites, got {sites!r}")
    if sites[1] != sites[0] + 1 or not 0 <= sites[0] < n - 1:
        raise ConfigError("input.sites", f"coupler feeds two adjacent sites inside 0..{n - 1}, got {sites!r}")
    if "phase" in inp:
        stated = _number(inp, "input", "phase")
        resolved = value if key == "phase" else dc.phase_of_detuning(value, cc)
        if abs(stated - resolved) > 1e-9:
            raise ConfigError("input.phase", f"{stated!r} disagrees with the coupler phase {resolved!r}")

    run = _section(doc, "run", _RUN) or {}
    default_length = geometry.device_length if geometry is not None else 6.0
    length = _number(run, "run", "device_length", default_length, check=lambda x: x > 0, why="must be > 0")
    both = "device_length" in run and "device_length" in (doc.get("geometry") or {})
    if both and length != geometry.device_length:
        raise ConfigError("run.device_length", "disagrees with geometry.device_length")
    if geometry is not None and geometry.device_length != length:
        geometry = GeometrySpec(**{**asdict(geometry), "device_length": length})
    fr = parse_fractions(fractions) if fractions is not None else parse_fractions(run.get("fractions", list(DEFAULT_FRACTIONS)))
    resamples = _number(run, "run", "resamples", DEFAULT_RESAMPLES, integer=True, check=lambda x: x >= 100, why="must be >= 100")

    det = _section(doc, "detection", _DETECTION)
    if seed is not None:
        det = dict(det or {}, seed=seed)
    detection = _parse_detection(det)
    if detection.efficiencies is not None and len(detection.efficiencies) != n:
        raise ConfigError("detection.efficiencies", f"expected {n} entries, got {len(detection.efficiencies)}")

    out = output if output is not None else doc.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output", "expected a directory path string")

    cfg = RunConfig(
        num_sites=n, coupling=c, diag_offset=offset, coupler_coupling=cc,
        coupler_key=key, coupler_value=value, source=source, sites=tuple(sites),
        fractions=fr, device_length=length, resamples=resamples,
        detection=detection, geometry=geometry, output=out,
    )
    try:
        cfg.device()
    except BlochEPRError as exc:
        raise ConfigError("<root>", str(exc)) from None
    return cfg


def load_config(path, **overrides) -> RunConfig:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(doc, **overrides)
