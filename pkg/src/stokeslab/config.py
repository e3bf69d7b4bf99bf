"""JSON configuration documents for the command line.

Every document carries ``"schema": 1``. Unknown keys are errors, so a typo
cannot silently fall back to a default. All errors raise :class:`ConfigError`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .forcing import RECIPES, Forcing
from .geometry import (
    BcMode,
    Difference,
    Direction,
    Disk,
    Family,
    Grid,
    Policy,
    Rect,
    SlitSquare,
    Union,
    make_sequence,
)
from .harness import MIDDLE_SLIT, ExperimentSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _keys(doc: dict, allowed, where: str, required=()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {', '.join(missing)}")


def _enum(cls, value, where):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(f"{where}: invalid value {value!r} (choose from {choices})") from None


def _pair(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{where}: expected a pair of numbers")
    return (float(v[0]), float(v[1]))


# Shapes ------------------------------------------------------------------------

PRESETS = {
    "square": Rect((0.0, 0.0), 1.0, 1.0),
    "disk": Disk((0.5, 0.5), 0.4),
    "slit": MIDDLE_SLIT,
    "wall-slit": SlitSquare((0.0, 0.0), 1.0, (0.5, 0.0), (0.5, 0.5)),
}


def shape_from_json(doc, where="shape"):
    if isinstance(doc, str):
        if doc not in PRESETS:
            raise ConfigError(f"{where}: unknown preset {doc!r} (choose from {', '.join(PRESETS)})")
        return PRESETS[doc]
    _keys(doc, {"type", "center", "radius", "corner", "width", "height", "size", "start", "end",
                "half_thickness", "parts", "base", "removed"}, where, ("type",))
    t = doc["type"]
    try:
        if t == "disk":
            _keys(doc, {"type", "center", "radius"}, where, ("center", "radius"))
            return Disk(_pair(doc["center"], where), float(doc["radius"]))
        if t == "rect":
            _keys(doc, {"type", "corner", "width", "height"}, where, ("corner", "width", "height"))
            return Rect(_pair(doc["corner"], where), float(doc["width"]), float(doc["height"]))
        if t == "slit_square":
            _keys(doc, {"type", "corner", "size", "start", "end", "half_thickness"}, where,
                  ("corner", "size", "start", "end"))
            return SlitSquare(
                _pair(doc["corner"], where), float(doc["size"]), _pair(doc["start"], where),
                _pair(doc["end"], where), float(doc.get("half_thickness", 0.0)),
            )
        if t == "union":
            _keys(doc, {"type", "parts"}, where, ("parts",))
            return Union(tuple(shape_from_json(p, f"{where}.parts") for p in doc["parts"]))
        if t == "difference":
            _keys(doc, {"type", "base", "removed"}, where, ("base", "removed"))
            return Difference(shape_from_json(doc["base"], f"{where}.base"),
                              shape_from_json(doc["removed"], f"{where}.removed"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown shape type {t!r}")


def grid_from_json(doc, where="grid") -> Grid:
    if isinstance(doc, int):
        return Grid.unit_square(doc)
    _keys(doc, {"n", "origin", "h", "nx", "ny"}, where)
    try:
        if "n" in doc:
            _keys(doc, {"n"}, where)
            return Grid.unit_square(int(doc["n"]))
        _keys(doc, {"origin", "h", "nx", "ny"}, where, ("h", "nx", "ny"))
        return Grid(_pair(doc.get("origin", (0, 0)), where), float(doc["h"]), int(doc["nx"]), int(doc["ny"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def forcing_from_json(doc, where="forcing") -> Forcing:
    if isinstance(doc, str):
        doc = {"name": doc}
    names = {f.name for f in fields(Forcing)}
    _keys(doc, names, where, ("name",))
    if doc["name"] not in RECIPES:
        raise ConfigError(f"{where}: unknown recipe {doc['name']!r} (choose from {', '.join(RECIPES)})")
    kw = dict(doc)
    for k in ("value", "center"):
        if k in kw:
            kw[k] = _pair(kw[k], f"{where}.{k}")
    return Forcing(**kw)


# Sequence experiments ----------------------------------------------------------


@dataclass(frozen=True)
class Assertion:
    """Pass/fail rule evaluated on a report: every field left ``None`` is skipped."""

    monotone: bool = True
    strict: bool = False
    final_error_max: float | None = None
    floor_factor: float | None = None
    delta_min: float | None = None
    delta_variation_max: float | None = None
    match_max: float | None = None


@dataclass(frozen=True)
class SequenceConfig:
    kind: str
    spec: ExperimentSpec | None = None
    sizes: tuple = ()
    shape: object = None
    forcing: Forcing | None = None
    precond: str | None = None
    tol: float = 1e-12
    check: Assertion = field(default_factory=Assertion)


_CONVERGENCE_KEYS = {"schema", "kind", "operator", "direction", "shape", "grid", "family", "refined",
                     "forcing", "modes", "tol", "maxit", "precond", "assert"}
_DISCRIMINATION_KEYS = {"schema", "kind", "sizes", "shape", "forcing", "tol", "precond", "assert"}
_PRECONDS = (None, "none", "jacobi", "block")


def check_schema(doc, where="config"):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    if "schema" not in doc:
        raise ConfigError(f"{where}: missing schema version")
    if doc["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"{where}: unsupported schema version {doc['schema']!r} (supported: {SCHEMA_VERSION})")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None


def _assertion(doc, where="assert") -> Assertion:
    if doc is None:
        return Assertion()
    _keys(doc, {f.name for f in fields(Assertion)}, where)
    return Assertion(**doc)


def sequence_config(doc: dict, threads: int = 1) -> SequenceConfig:
    check_schema(doc)
    kind = doc.get("kind", "convergence")
    if kind == "discrimination":
        _keys(doc, _DISCRIMINATION_KEYS, "config", ("sizes",))
        shape = shape_from_json(doc.get("shape", "slit"))
        if not isinstance(shape, SlitSquare):
            raise ConfigError("config.shape: discrimination needs a slit_square")
        precond = doc.get("precond")
        if precond not in _PRECONDS:
            raise ConfigError(f"config.precond: invalid value {precond!r}")
        sizes = doc["sizes"]
        if not (isinstance(sizes, list) and sizes and all(isinstance(n, int) and n > 0 for n in sizes)):
            raise ConfigError("config.sizes: expected a nonempty list of positive integers")
        return SequenceConfig(
            kind,
            sizes=tuple(sizes),
            shape=shape,
            forcing=forcing_from_json(doc["forcing"]) if "forcing" in doc else None,
            precond=precond,
            tol=float(doc.get("tol", 1e-12)),
            check=_assertion(doc.get("assert")),
        )
    if kind != "convergence":
        raise ConfigError(f"config.kind: invalid value {kind!r} (choose from convergence, discrimination)")
    _keys(doc, _CONVERGENCE_KEYS, "config", ("operator", "direction", "shape", "grid"))
    if ("family" in doc) == ("refined" in doc):
        raise ConfigError("config: give exactly one of family (fixed grid) or refined")
    operator = doc["operator"]
    if operator not in ("laplace", "stokes"):
        raise ConfigError(f"config.operator: invalid value {operator!r} (choose from laplace, stokes)")
    direction = _enum(Direction, doc["direction"], "config.direction")
    shape = shape_from_json(doc["shape"])
    grid = grid_from_json(doc["grid"])
    modes = tuple(_enum(BcMode, m, "config.modes") for m in doc.get("modes", ["weak", "pseudo"]))
    precond = doc.get("precond")
    if precond not in _PRECONDS:
        raise ConfigError(f"config.precond: invalid value {precond!r}")
    common = dict(
        operator=operator,
        direction=direction,
        forcing=forcing_from_json(doc.get("forcing", "constant")),
        modes=modes,
        tol=float(doc.get("tol", 1e-10)),
        maxit=doc.get("maxit"),
        precond=None if precond == "none" else precond,
        threads=threads,
    )
    try:
        if "family" in doc:
            fam = doc["family"]
            _keys(fam, {"kind", "offsets", "levels", "policy"}, "config.family", ("kind",))
            family = Family(
                fam["kind"],
                shape,
                offsets=tuple(int(k) for k in fam.get("offsets", ())),
                levels=int(fam.get("levels", 3)),
                direction=direction,
                policy=_enum(Policy, fam.get("policy", "center"), "config.family.policy"),
            )
            spec = ExperimentSpec(sequence=make_sequence(family, grid), **common)
        else:
            ref = doc["refined"]
            _keys(ref, {"levels", "policy"}, "config.refined")
            policy = _enum(Policy, ref["policy"], "config.refined.policy") if "policy" in ref else None
            spec = ExperimentSpec(shape=shape, base_grid=grid, levels=int(ref.get("levels", 4)), policy=policy, **common)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from None
    return SequenceConfig(kind, spec=spec, check=_assertion(doc.get("assert")))
