"""Shared domain types, spec-file ingestion, and validation.

All lengths are mm, power in W, temperature in degrees C unless a field
name says otherwise. Spec files are JSON documents with top-level keys
``package``, ``chiplets``, ``stack``, ``process``, ``phy``, ``anneal``
(schema documented in the repository README).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

CHIPLET_KINDS = ("compute", "gpu", "memory", "io", "noc", "analog")

AMBIENT_MIN_C = -40.0  # automotive qualification range
AMBIENT_MAX_C = 125.0


class SpecError(ValueError):
    """Malformed or invalid specification document."""


class ParseError(SpecError):
    """Document is not structurally readable."""


class ValidationError(SpecError):
    """An invariant is violated; message names the offending field path."""


@dataclass(frozen=True)
class ChipletSpec:
    """One die: footprint, dissipated power, and logical connectivity."""

    name: str
    width: float
    height: float
    power: float
    kind: str = "compute"
    ports: tuple[tuple[str, float], ...] = ()

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class LayerSpec:
    name: str
    thickness_mm: float
    conductivity: float  # W/(m K)


@dataclass(frozen=True)
class ThermalStack:
    """Ordered 2.5D package layers, bottom (substrate) to top (heatsink).

    ``sink_side_mm`` limits the convective top boundary to a centered square
    footprint of that side (a fixed-size heat sink / cold plate); None means
    the whole top face is cooled.
    """

    layers: tuple[LayerSpec, ...]
    h_top: float = 1000.0  # W/(m^2 K), convective top boundary
    ambient: float = 45.0  # degrees C
    sink_side_mm: float | None = None

    def __post_init__(self) -> None:
        if len(self.layers) < 2:
            raise ValidationError("stack.layers: at least 2 layers required")
        for i, layer in enumerate(self.layers):
            if layer.thickness_mm <= 0:
                raise ValidationError(f"stack.layers[{i}].thickness_mm: must be > 0")
            if layer.conductivity <= 0:
                raise ValidationError(f"stack.layers[{i}].conductivity: must be > 0")
        if self.h_top <= 0:
            raise ValidationError("stack.h_top: must be > 0")

    @property
    def layer_names(self) -> tuple[str, ...]:
        return tuple(layer.name for layer in self.layers)

    def layer_index(self, name: str) -> int:
        try:
            return self.layer_names.index(name)
        except ValueError:
            raise KeyError(f"unknown layer {name!r}; have {self.layer_names}") from None


#: Default 2.5D sandwich. Conductivities are standard material values and
#: the bump layers are homogenized. All overridable in the spec file.
DEFAULT_STACK_LAYERS = (
    LayerSpec("substrate", 1.0, 0.3),
    LayerSpec("c4", 0.1, 2.0),
    LayerSpec("interposer", 0.1, 130.0),
    LayerSpec("microbumps", 0.05, 2.0),
    LayerSpec("chiplet", 0.5, 130.0),
    LayerSpec("tim", 0.1, 5.0),
    LayerSpec("spreader", 0.3, 400.0),
    LayerSpec("sink", 0.6, 400.0),
)


def default_stack(ambient: float = 45.0, h_top: float = 1000.0) -> ThermalStack:
    return ThermalStack(DEFAULT_STACK_LAYERS, h_top=h_top, ambient=ambient)


@dataclass(frozen=True)
class ProcessCostParams:
    """Wafer economics inputs for the negative-binomial yield model."""

    wafer_cost: float = 10000.0
    wafer_diameter: float = 300.0  # mm
    d0: float = 0.002  # defects per mm^2
    alpha_yield: float = 3.0
    assembly_die_survival: float = 0.999
    assembly_conn_survival: float = 0.999999

    def __post_init__(self) -> None:
        if self.d0 < 0:
            raise ValidationError("process.d0: must be >= 0")
        if self.alpha_yield <= 0:
            raise ValidationError("process.alpha_yield: must be > 0")
        for name in ("assembly_die_survival", "assembly_conn_survival"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ValidationError(f"process.{name}: must be in (0, 1]")


@dataclass(frozen=True)
class ServiceSpec:
    """Inputs of the analytic latency/throughput model."""

    word_bits: float
    service_bandwidth: float  # bits/s
    base_latency: float = 0.0  # s
    clock: float = 2e9  # Hz
    channels: int = 1
    bits_per_channel_per_cycle: float = 1.0

    def __post_init__(self) -> None:
        if self.word_bits < 0:
            raise ValidationError("service.word_bits: must be >= 0")
        if self.service_bandwidth <= 0:
            raise ValidationError("service.service_bandwidth: must be > 0")
        if self.base_latency < 0:
            raise ValidationError("service.base_latency: must be >= 0")
        if self.clock <= 0:
            raise ValidationError("service.clock: must be > 0")
        if self.channels < 0:
            raise ValidationError("service.channels: must be >= 0")


@dataclass(frozen=True)
class PowerParams:
    """CMOS power model inputs (switching, short-circuit, leakage)."""

    activity: float = 0.1
    load_capacitance: float = 1e-9  # F
    frequency: float = 2e9  # Hz
    voltage: float = 1.0  # V
    gain_factor: float = 1e-4  # A/V^2
    transition_time: float = 50e-12  # s
    threshold: float = 0.3  # V
    leakage_current: float = 1e-10  # A per transistor
    transistor_density: float = 1e8  # transistors/mm^2
    area: float = 100.0  # mm^2

    def __post_init__(self) -> None:
        for name in (
            "activity", "load_capacitance", "frequency", "voltage",
            "gain_factor", "transition_time", "threshold",
            "leakage_current", "transistor_density", "area",
        ):
            if getattr(self, name) < 0:
                raise ValidationError(f"power.{name}: must be >= 0")
        if not (0 <= self.activity <= 1):
            raise ValidationError("power.activity: must be in [0, 1]")


@dataclass(frozen=True)
class PackageSpec:
    """A validated package: chiplets + interposer + thermal stack."""

    name: str
    chiplets: tuple[ChipletSpec, ...]
    interposer_width: float
    interposer_height: float
    min_spacing: float = 1.0
    ambient: float = 45.0
    stack: ThermalStack = field(default_factory=default_stack)

    def chiplet(self, name: str) -> ChipletSpec:
        for c in self.chiplets:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def chiplet_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.chiplets)

    @property
    def total_power(self) -> float:
        return sum(c.power for c in self.chiplets)

    def with_interposer(self, width: float, height: float) -> "PackageSpec":
        spec = replace(self, interposer_width=width, interposer_height=height)
        _check_footprint_budget(spec)
        return spec


# ---------------------------------------------------------------------------
# Floorplans (shared between the thermal solver and the placer)


@dataclass(frozen=True)
class PlacedChiplet:
    """A chiplet instance placed on the interposer.

    (x, y) is the lower-left corner of the *effective* (rotated) footprint;
    width/height are the unrotated footprint.
    """

    name: str
    x: float
    y: float
    rotation: int  # 0 / 90 / 180 / 270
    width: float
    height: float
    power: float

    def __post_init__(self) -> None:
        if self.rotation not in (0, 90, 180, 270):
            raise ValidationError(f"placement {self.name}: rotation must be a multiple of 90")

    @property
    def eff_width(self) -> float:
        return self.height if self.rotation in (90, 270) else self.width

    @property
    def eff_height(self) -> float:
        return self.width if self.rotation in (90, 270) else self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.eff_width / 2.0, self.y + self.eff_height / 2.0)


@dataclass(frozen=True)
class Floorplan:
    """Placements on an interposer plus the inter-chiplet connectivity."""

    width: float
    height: float
    placements: tuple[PlacedChiplet, ...]
    links: tuple[tuple[str, str, float], ...] = ()  # (a, b, weight), a < b
    min_spacing: float = 0.0

    def placement(self, name: str) -> PlacedChiplet:
        for p in self.placements:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def total_power(self) -> float:
        return sum(p.power for p in self.placements)

    def is_valid(self) -> bool:
        try:
            self.validate()
        except ValidationError:
            return False
        return True

    def validate(self) -> None:
        """Raise unless all placements are in bounds and non-overlapping.

        Bounds require min_spacing/2 margin to the interposer edge; pairs
        require min_spacing separation (the spacing halo).
        """
        margin = self.min_spacing / 2.0
        eps = 1e-9
        for p in self.placements:
            if (p.x < margin - eps or p.y < margin - eps
                    or p.x + p.eff_width > self.width - margin + eps
                    or p.y + p.eff_height > self.height - margin + eps):
                raise ValidationError(f"placement {p.name}: outside interposer bounds")
        s = self.min_spacing
        for i, a in enumerate(self.placements):
            for b in self.placements[i + 1:]:
                if (a.x < b.x + b.eff_width + s - eps
                        and b.x < a.x + a.eff_width + s - eps
                        and a.y < b.y + b.eff_height + s - eps
                        and b.y < a.y + a.eff_height + s - eps):
                    raise ValidationError(f"placements {a.name} and {b.name} overlap or violate spacing")
        seen: set[str] = set()
        for p in self.placements:
            if p.name in seen:
                raise ValidationError(f"placement {p.name}: duplicate chiplet")
            seen.add(p.name)

    def replaced(self, placement: PlacedChiplet) -> "Floorplan":
        new = tuple(placement if p.name == placement.name else p for p in self.placements)
        return replace(self, placements=new)


def floorplan_to_document(fp: Floorplan) -> dict:
    """Standalone JSON form of a floorplan (footprints and links included)."""
    return {
        "interposer": {"width_mm": fp.width, "height_mm": fp.height,
                       "min_spacing_mm": fp.min_spacing},
        "placements": [
            {"name": p.name, "x_mm": p.x, "y_mm": p.y, "rotation_deg": p.rotation,
             "width_mm": p.width, "height_mm": p.height, "power_w": p.power}
            for p in fp.placements
        ],
        "links": [{"a": a, "b": b, "weight": w} for a, b, w in fp.links],
    }


def floorplan_from_document(document: dict | str | Path) -> Floorplan:
    doc = _read_document(document)
    interposer = doc.get("interposer")
    if not isinstance(interposer, dict):
        raise ValidationError("interposer: missing or not an object")
    placements = []
    for i, pd in enumerate(doc.get("placements", [])):
        path = f"placements[{i}]"
        placements.append(PlacedChiplet(
            pd.get("name", f"chiplet{i}"),
            _num(pd, "x_mm", path), _num(pd, "y_mm", path),
            int(_num(pd, "rotation_deg", path, 0.0)),
            _num(pd, "width_mm", path), _num(pd, "height_mm", path),
            _num(pd, "power_w", path, 0.0),
        ))
    links = tuple(
        (ld["a"], ld["b"], float(ld.get("weight", 1.0)))
        for ld in doc.get("links", [])
    )
    fp = Floorplan(
        _num(interposer, "width_mm", "interposer"),
        _num(interposer, "height_mm", "interposer"),
        tuple(placements), links,
        _num(interposer, "min_spacing_mm", "interposer", 0.0),
    )
    fp.validate()
    return fp


def links_from_spec(spec: PackageSpec) -> tuple[tuple[str, str, float], ...]:
    """Undirected (a, b, weight) link list from the symmetrized matrix."""
    names = spec.chiplet_names
    mat = validate_connectivity(spec)
    out = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            if mat[i, j] > 0:
                out.append((names[i], names[j], float(mat[i, j])))
    return tuple(out)


# ---------------------------------------------------------------------------
# Loading / validation


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ValidationError(f"{path}: {msg}")


def _num(doc: dict, key: str, path: str, default: float | None = None) -> float:
    if key not in doc:
        if default is None:
            raise ValidationError(f"{path}.{key}: missing required field")
        return default
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ValidationError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _parse_chiplet(doc: Any, path: str) -> ChipletSpec:
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected an object")
    name = doc.get("name")
    _require(isinstance(name, str) and bool(name), f"{path}.name", "missing or empty")
    width = _num(doc, "width_mm", path)
    height = _num(doc, "height_mm", path)
    power = _num(doc, "power_w", path, 0.0)
    kind = doc.get("kind", "compute")
    _require(kind in CHIPLET_KINDS, f"{path}.kind", f"must be one of {CHIPLET_KINDS}")
    _require(width > 0, f"{path}.width_mm", "must be > 0")
    _require(height > 0, f"{path}.height_mm", "must be > 0")
    _require(power >= 0, f"{path}.power_w", "must be >= 0")
    ports = []
    for k, port in enumerate(doc.get("ports", [])):
        ppath = f"{path}.ports[{k}]"
        if not isinstance(port, dict):
            raise ValidationError(f"{ppath}: expected an object")
        peer = port.get("peer")
        _require(isinstance(peer, str) and bool(peer), f"{ppath}.peer", "missing or empty")
        weight = _num(port, "weight", ppath, 1.0)
        _require(weight >= 1, f"{ppath}.weight", "must be >= 1")
        ports.append((peer, weight))
    return ChipletSpec(name, width, height, power, kind, tuple(ports))


def _parse_stack(doc: Any, ambient: float) -> ThermalStack:
    if doc is None:
        return default_stack(ambient=ambient)
    if not isinstance(doc, dict):
        raise ValidationError("stack: expected an object")
    h_top = _num(doc, "h_top_w_m2k", "stack", 1000.0)
    sink_side = doc.get("sink_side_mm")
    if sink_side is not None:
        sink_side = _num(doc, "sink_side_mm", "stack")
    layers_doc = doc.get("layers")
    if layers_doc is None:
        layers = DEFAULT_STACK_LAYERS
    else:
        layers = []
        for i, ld in enumerate(layers_doc):
            lpath = f"stack.layers[{i}]"
            if not isinstance(ld, dict):
                raise ValidationError(f"{lpath}: expected an object")
            lname = ld.get("name")
            _require(isinstance(lname, str) and bool(lname), f"{lpath}.name", "missing or empty")
            layers.append(LayerSpec(
                lname,
                _num(ld, "thickness_mm", lpath),
                _num(ld, "conductivity_w_mk", lpath),
            ))
        layers = tuple(layers)
    return ThermalStack(layers, h_top=h_top, ambient=ambient, sink_side_mm=sink_side)


def _check_footprint_budget(spec: PackageSpec) -> None:
    s = spec.min_spacing
    budget = sum((c.width + s) * (c.height + s) for c in spec.chiplets)
    avail = spec.interposer_width * spec.interposer_height
    _require(
        budget <= avail,
        "package",
        f"chiplet footprints with spacing halo ({budget:.1f} mm^2) exceed "
        f"interposer area ({avail:.1f} mm^2)",
    )


def load_spec(document: dict | str | Path) -> PackageSpec:
    """Parse and validate a package spec document.

    Accepts a parsed dict, a JSON string, or a path to a JSON file.
    """
    doc = _read_document(document)
    pkg = doc.get("package")
    if not isinstance(pkg, dict):
        raise ValidationError("package: missing or not an object")
    name = pkg.get("name", "package")
    width = _num(pkg, "interposer_width_mm", "package")
    height = _num(pkg, "interposer_height_mm", "package")
    min_spacing = _num(pkg, "min_spacing_mm", "package", 1.0)
    ambient = _num(pkg, "ambient_c", "package", 45.0)
    _require(width > 0, "package.interposer_width_mm", "must be > 0")
    _require(height > 0, "package.interposer_height_mm", "must be > 0")
    _require(min_spacing >= 0, "package.min_spacing_mm", "must be >= 0")
    _require(AMBIENT_MIN_C <= ambient <= AMBIENT_MAX_C, "package.ambient_c",
             f"must be within [{AMBIENT_MIN_C}, {AMBIENT_MAX_C}] (automotive range)")

    chiplets_doc = doc.get("chiplets")
    if not isinstance(chiplets_doc, list) or not chiplets_doc:
        raise ValidationError("chiplets: must be a non-empty list")
    chiplets = tuple(_parse_chiplet(cd, f"chiplets[{i}]") for i, cd in enumerate(chiplets_doc))

    names = [c.name for c in chiplets]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise ValidationError(f"chiplets: duplicate chiplet name {dup!r}")
    for i, c in enumerate(chiplets):
        for k, (peer, _) in enumerate(c.ports):
            _require(peer in names, f"chiplets[{i}].ports[{k}].peer",
                     f"unresolved peer {peer!r}")
            _require(peer != c.name, f"chiplets[{i}].ports[{k}].peer",
                     "chiplet cannot link to itself")

    stack = _parse_stack(doc.get("stack"), ambient)
    spec = PackageSpec(name, chiplets, width, height, min_spacing, ambient, stack)
    _check_footprint_budget(spec)
    # Symmetrize connectivity now so invariants hold on the returned spec;
    # raises on conflicting weights.
    mat = validate_connectivity(spec)
    chiplets = tuple(
        replace(c, ports=_ports_from_matrix(mat, names, i))
        for i, c in enumerate(chiplets)
    )
    return replace(spec, chiplets=chiplets)


def _ports_from_matrix(mat: np.ndarray, names: list[str], i: int) -> tuple[tuple[str, float], ...]:
    return tuple(
        (names[j], float(mat[i, j]))
        for j in sorted(range(len(names)), key=lambda j: names[j])
        if mat[i, j] > 0
    )


def _read_document(document: dict | str | Path) -> dict:
    if isinstance(document, dict):
        return document
    if isinstance(document, Path) or (isinstance(document, str) and "\n" not in document
                                      and document.strip().endswith(".json")):
        path = Path(document)
        if not path.exists():
            raise ParseError(f"spec file not found: {path}")
        text = path.read_text()
    else:
        text = str(document)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    return doc


def validate_connectivity(spec: PackageSpec) -> np.ndarray:
    """Symmetric n x n connection-weight matrix with zero diagonal.

    A link declared on either endpoint is propagated to both; conflicting
    nonzero weights are an error.
    """
    names = list(spec.chiplet_names)
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    mat = np.zeros((n, n))
    for c in spec.chiplets:
        i = index[c.name]
        for peer, weight in c.ports:
            j = index[peer]
            if mat[i, j] == 0:
                mat[i, j] = weight
            elif not math.isclose(mat[i, j], weight, rel_tol=1e-12):
                raise ValidationError(
                    f"chiplets: conflicting connection weights between "
                    f"{names[min(i, j)]!r} and {names[max(i, j)]!r}: "
                    f"{mat[i, j]} vs {weight}")
    # propagate one-sided declarations
    for i in range(n):
        for j in range(n):
            if mat[i, j] > 0 and mat[j, i] == 0:
                mat[j, i] = mat[i, j]
            elif mat[i, j] > 0 and not math.isclose(mat[i, j], mat[j, i], rel_tol=1e-12):
                raise ValidationError(
                    f"chiplets: conflicting connection weights between "
                    f"{names[min(i, j)]!r} and {names[max(i, j)]!r}: "
                    f"{mat[i, j]} vs {mat[j, i]}")
    np.fill_diagonal(mat, 0.0)
    return mat


def serialize_spec(spec: PackageSpec) -> dict:
    """Normalized document form; load_spec(serialize_spec(s)) == s."""
    return {
        "package": {
            "name": spec.name,
            "interposer_width_mm": spec.interposer_width,
            "interposer_height_mm": spec.interposer_height,
            "min_spacing_mm": spec.min_spacing,
            "ambient_c": spec.ambient,
        },
        "chiplets": [
            {
                "name": c.name,
                "width_mm": c.width,
                "height_mm": c.height,
                "power_w": c.power,
                "kind": c.kind,
                "ports": [{"peer": peer, "weight": w} for peer, w in c.ports],
            }
            for c in spec.chiplets
        ],
        "stack": {
            "h_top_w_m2k": spec.stack.h_top,
            "sink_side_mm": spec.stack.sink_side_mm,
            "layers": [
                {"name": l.name, "thickness_mm": l.thickness_mm, "conductivity_w_mk": l.conductivity}
                for l in spec.stack.layers
            ],
        },
    }


# ---------------------------------------------------------------------------
# Full spec-file bundle (CLI entry): package plus the optional sections
# driving the other subcommands.


@dataclass(frozen=True)
class SpecBundle:
    package: PackageSpec
    process: ProcessCostParams
    raw: dict

    @property
    def anneal(self) -> dict:
        section = self.raw.get("anneal", {})
        return section if isinstance(section, dict) else {}

    @property
    def phy(self) -> dict:
        section = self.raw.get("phy", {})
        return section if isinstance(section, dict) else {}

    @property
    def tiles(self) -> list[dict]:
        section = self.raw.get("tiles", [])
        return section if isinstance(section, list) else []

    @property
    def configs(self) -> list[dict]:
        section = self.raw.get("configs", [])
        return section if isinstance(section, list) else []


def load_bundle(document: dict | str | Path) -> SpecBundle:
    doc = _read_document(document)
    package = load_spec(doc)
    pdoc = doc.get("process", {})
    if not isinstance(pdoc, dict):
        raise ValidationError("process: expected an object")
    process = ProcessCostParams(
        wafer_cost=_num(pdoc, "wafer_cost", "process", 10000.0),
        wafer_diameter=_num(pdoc, "wafer_diameter_mm", "process", 300.0),
        d0=_num(pdoc, "d0_per_mm2", "process", 0.002),
        alpha_yield=_num(pdoc, "alpha_yield", "process", 3.0),
        assembly_die_survival=_num(pdoc, "assembly_die_survival", "process", 0.999),
        assembly_conn_survival=_num(pdoc, "assembly_conn_survival", "process", 0.999999),
    )
    return SpecBundle(package=package, process=process, raw=doc)
