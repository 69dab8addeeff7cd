"""
Grasp File IO
JSON grasp descriptions (schema-validated), canonical emission and CSV result tables
"""

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Dict, Iterable, List, Optional, Union

import numpy as np
from jsonschema import Draft7Validator

from errors import GraspFileError, GraspStabError
from grasp_model import ContactSpec, GraspModel, HandModel, JointSpec
from spatial import IterativeConfig, RelaxationSettings

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-6

_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}

GRASP_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["mode", "contacts"],
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["planar", "spatial"]},
        "name": {"type": "string"},
        "object": {
            "type": "object",
            "properties": {"frame": {"type": "string"}, "description": {"type": "string"}},
        },
        "contacts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["position", "normal", "mu"],
                "additionalProperties": False,
                "properties": {
                    "position": _VECTOR,
                    "normal": _VECTOR,
                    "mu": {"type": "number", "minimum": 0},
                    "link": {"type": "integer", "minimum": -1},
                    "preload": {"type": "number", "minimum": 0},
                    "stiffness": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "hand": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "joints": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["parent", "axis", "origin"],
                        "additionalProperties": False,
                        "properties": {
                            "parent": {"type": "integer", "minimum": -1},
                            "axis": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                            "origin": _VECTOR,
                        },
                    },
                },
                "transmission_R": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "commanded": {"type": "array", "items": {"type": "number"}},
            },
        },
        "defaults": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eta": {"type": "number", "minimum": 0},
                "q": {"type": "integer", "minimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "cone_resolution": {"type": "integer", "minimum": 3},
            },
        },
    },
}

_validator = Draft7Validator(GRASP_SCHEMA)


@dataclass(frozen=True)
class GraspDefaults:
    """Per-file solver defaults; None falls back to config.yaml"""

    eta: Optional[float] = None
    q: Optional[int] = None
    gamma: Optional[float] = None
    epsilon: Optional[float] = None
    cone_resolution: Optional[int] = None

    def relaxation_settings(self, q: Optional[int] = None) -> RelaxationSettings:
        return RelaxationSettings.from_config(q=q if q is not None else self.q)

    def iterative_config(self) -> IterativeConfig:
        return IterativeConfig.from_config(
            gamma=self.gamma, epsilon=self.epsilon, cone_resolution=self.cone_resolution
        )

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class LoadedGrasp:
    model: GraspModel
    defaults: GraspDefaults
    source: str = ""


def _pointer(path: Iterable[Any]) -> str:
    return "".join(f"/{p}" for p in path)


def _schema_error(doc: Any) -> Optional[GraspFileError]:
    errors = sorted(_validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if not errors:
        return None
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "required" and isinstance(err.instance, dict):
        missing = [p for p in err.validator_value if p not in err.instance]
        if missing:
            return GraspFileError(f"missing required property {missing[0]!r}", _pointer(path + [missing[0]]))
    return GraspFileError(err.message, _pointer(path))


def _check_unit(values: List[float], pointer: str) -> None:
    norm = math.sqrt(sum(v * v for v in values))
    if abs(norm - 1.0) > UNIT_TOL:
        raise GraspFileError(f"must be a unit vector within {UNIT_TOL:g} (|v| = {norm:.9g})", pointer)


def parse_grasp_document(doc: Any, source: str = "<document>") -> LoadedGrasp:
    """
    Validate a decoded grasp document and build the model

    Raises:
        GraspFileError: schema violation or model invariant failure, with a JSON pointer
    """
    err = _schema_error(doc)
    if err is not None:
        raise err
    dim = 2 if doc["mode"] == "planar" else 3

    contacts = []
    for i, raw in enumerate(doc["contacts"]):
        for key in ("position", "normal"):
            if len(raw[key]) != dim:
                raise GraspFileError(f"expected {dim} components in {doc['mode']} mode", f"/contacts/{i}/{key}")
        _check_unit(raw["normal"], f"/contacts/{i}/normal")
        try:
            contacts.append(
                ContactSpec(
                    position=tuple(raw["position"]),
                    normal=tuple(raw["normal"]),
                    mu=float(raw["mu"]),
                    link=int(raw.get("link", -1)),
                    preload=float(raw.get("preload", 0.0)),
                    stiffness=float(raw.get("stiffness", 1.0)),
                )
            )
        except GraspStabError as e:
            raise GraspFileError(e.message, f"/contacts/{i}") from e

    hand_doc = doc.get("hand", {})
    joints = []
    for j, raw in enumerate(hand_doc.get("joints", [])):
        _check_unit(raw["axis"], f"/hand/joints/{j}/axis")
        try:
            joints.append(JointSpec(int(raw["parent"]), tuple(raw["axis"]), tuple(raw["origin"])))
        except GraspStabError as e:
            raise GraspFileError(e.message, f"/hand/joints/{j}") from e

    transmission = hand_doc.get("transmission_R")
    if transmission is not None:
        widths = {len(row) for row in transmission}
        if len(transmission) != len(joints) or len(widths) > 1:
            raise GraspFileError(f"must be a {len(joints)}-row matrix with equal row lengths", "/hand/transmission_R")
    try:
        hand = HandModel(
            tuple(joints),
            None if transmission is None else tuple(tuple(row) for row in transmission),
            tuple(hand_doc.get("commanded", ())),
        )
    except GraspStabError as e:
        raise GraspFileError(e.message, "/hand") from e

    try:
        model = GraspModel(doc["mode"], tuple(contacts), hand, doc.get("name", Path(source).stem), UNIT_TOL)
    except GraspStabError as e:
        raise GraspFileError(e.message, "") from e

    defaults = GraspDefaults(**doc.get("defaults", {}))
    logger.debug(f"Parsed grasp {model.name!r} from {source}: {model.mode}, m={model.m}")
    return LoadedGrasp(model, defaults, source)


def parse_grasp_file(path: Union[str, Path]) -> LoadedGrasp:
    """Read, decode and validate a grasp description file"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise GraspFileError(f"file not found: {path}") from e
    except UnicodeDecodeError as e:
        raise GraspFileError(f"not valid UTF-8: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraspFileError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return parse_grasp_document(doc, str(path))


def grasp_to_document(grasp: GraspModel, defaults: Optional[GraspDefaults] = None) -> Dict[str, Any]:
    """Plain-data form of a grasp that parse_grasp_document reads back to an equal model"""
    contacts = []
    for c in grasp.contacts:
        entry: Dict[str, Any] = {
            "position": list(c.position),
            "normal": list(c.normal),
            "mu": c.mu,
            "link": c.link,
        }
        if c.preload:
            entry["preload"] = c.preload
        if c.stiffness != 1.0:
            entry["stiffness"] = c.stiffness
        contacts.append(entry)
    doc: Dict[str, Any] = {"mode": grasp.mode, "name": grasp.name, "contacts": contacts}
    hand = grasp.hand
    if hand.joint_count:
        doc["hand"] = {
            "joints": [
                {"parent": j.parent, "axis": list(j.axis), "origin": list(j.origin)} for j in hand.joints
            ],
            "transmission_R": [list(row) for row in hand.transmission],
            "commanded": list(hand.commanded),
        }
    if defaults is not None and defaults.to_dict():
        doc["defaults"] = defaults.to_dict()
    return doc


def canonical_json(value: Any) -> str:
    """Sorted keys, no whitespace, floats as %.12g; identical input gives identical bytes"""
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(f"{json.dumps(str(k))}:{canonical_json(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in value) + "]"
    if isinstance(value, np.ndarray):
        return canonical_json(value.tolist())
    if isinstance(value, (bool, np.bool_)) or value is None:
        return json.dumps(bool(value) if value is not None else None)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return json.dumps(None)
        return "%.12g" % v
    return json.dumps(str(value))


def write_canonical(value: Any, target: Union[str, Path, IO[str]]) -> None:
    text = canonical_json(value) + "\n"
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    else:
        target.write(text)


def _fmt(value: float) -> str:
    return "" if value is None or not math.isfinite(value) else "%.12g" % value


def write_map_csv(rows, target: IO[str]) -> None:
    """Header angle_deg,magnitude,status; one row per map direction"""
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["angle_deg", "magnitude", "status"])
    for row in rows:
        writer.writerow([_fmt(row.angle_deg), _fmt(row.magnitude), row.status.value])


def write_sweep_csv(rows, target: IO[str]) -> None:
    """Header torque,magnitude,status; one row per swept command"""
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["torque", "magnitude", "status"])
    for row in rows:
        writer.writerow([_fmt(row.value), _fmt(row.magnitude), row.status.value])
