"""Deterministic JSON emission shared by the CLI and the reproduction runner."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import Covector


def jsonable(obj):
    """Convert numpy scalars/arrays, covectors and non-finite floats into plain JSON values."""
    if isinstance(obj, Covector):
        return obj.to_json_dict()
    if hasattr(obj, "to_json_dict"):
        return jsonable(obj.to_json_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def covector_digest(omega: Covector) -> str:
    """sha256 of the canonical (sorted, compact) covector JSON."""
    text = json.dumps(omega.to_json_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def bytes_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class Check:
    """One asserted quantity: ``value`` compared against ``tol`` under ``relation``."""

    name: str
    value: float
    tol: float
    anchor: str
    relation: str = "<="  # "<=", ">=", "<", "==" (exact)
    passed: bool | None = None

    def __post_init__(self):
        if self.passed is None:
            v, t = self.value, self.tol
            if self.relation == "<=":
                self.passed = bool(v <= t)
            elif self.relation == ">=":
                self.passed = bool(v >= t)
            elif self.relation == "<":
                self.passed = bool(v < t)
            elif self.relation == "==":
                self.passed = bool(v == t)
            else:
                raise ValueError(f"unknown relation {self.relation!r}")

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tol": self.tol,
            "relation": self.relation,
            "anchor": self.anchor,
            "pass": self.passed,
        }


@dataclass
class Report:
    command: str
    checks: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def add(self, *args, **kw) -> Check:
        c = Check(*args, **kw)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "checks": [c.to_json_dict() for c in self.checks],
            "details": self.details,
            "pass": self.passed,
        }
