"""Environment files and result persistence."""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from .environment import Environment, LayoutError

SCHEMA_NAME = "environment.schema.json"


class EnvironmentFileError(ValueError):
    """Malformed or invalid environment file, located by line and column when possible."""

    def __init__(self, message: str, source: str = "<input>", line: int | None = None,
                 column: int | None = None, realization: int | None = None):
        self.source, self.line, self.column, self.realization = source, line, column, realization
        where = source if line is None else f"{source}:{line}:{column}"
        super().__init__(f"{where}: {message}")


def environment_schema() -> dict:
    text = resources.files("losplan").joinpath("schemas", SCHEMA_NAME).read_text()
    return json.loads(text)


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\r\n":
        pos += 1
    return pos


def _locate(text: str, path: Sequence) -> tuple[int, int] | None:
    """Line and column of the value at a JSON path, found by walking the raw text."""
    dec = json.JSONDecoder()
    pos = _skip_ws(text, 0)
    try:
        for key in path:
            if text[pos] == "{":
                pos = _skip_ws(text, pos + 1)
                while text[pos] != "}":
                    name, pos = dec.raw_decode(text, pos)
                    pos = _skip_ws(text, _skip_ws(text, pos) + 1)  # past ':'
                    if name == key:
                        break
                    _, pos = dec.raw_decode(text, pos)
                    pos = _skip_ws(text, pos)
                    if text[pos] == ",":
                        pos = _skip_ws(text, pos + 1)
                else:
                    return None
            elif text[pos] == "[":
                pos = _skip_ws(text, pos + 1)
                for _ in range(int(key)):
                    _, pos = dec.raw_decode(text, pos)
                    pos = _skip_ws(text, _skip_ws(text, pos) + 1)  # past ','
                if text[pos] == "]":
                    return None
            else:
                return None
    except (ValueError, IndexError):
        return None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _obstacle_path(k: int, n_fixed: int) -> list:
    return ["fixed_obstacles", k] if k < n_fixed else ["stochastic_obstacles", k - n_fixed]


def environment_from_dict(data: dict, text: str | None = None, source: str = "<input>") -> Environment:
    """Validate against the schema, then build and check every realization."""

    def fail(msg, path=(), realization=None):
        loc = _locate(text, list(path)) if text is not None else None
        raise EnvironmentFileError(msg, source, *(loc or (None, None)), realization=realization)

    validator = jsonschema.Draft202012Validator(environment_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "(root)"
        fail(f"schema violation at {where}: {err.message}", err.absolute_path)
    for p in _iter_points(data):
        if not all(math.isfinite(v) for v in p):
            fail("coordinates must be finite")

    fixed = data.get("fixed_obstacles", [])
    stoch = [(s["shape"], s["placements"]) for s in data.get("stochastic_obstacles", [])]
    try:
        return Environment.build(data["outer"], fixed, stoch)
    except LayoutError as exc:
        path = _obstacle_path(exc.obstacles[0], len(fixed)) if exc.obstacles else ()
        fail(str(exc), path, exc.realization)


def _iter_points(data: dict):
    yield from data.get("outer", [])
    for ring in data.get("fixed_obstacles", []):
        yield from ring
    for s in data.get("stochastic_obstacles", []):
        yield from s.get("shape", [])
        yield from s.get("placements", [])


def load_environment(path) -> Environment:
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnvironmentFileError(exc.msg, str(path), exc.lineno, exc.colno) from None
    return environment_from_dict(data, text, str(path))


def _ring(a: np.ndarray) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in np.asarray(a)]


def environment_to_dict(env: Environment) -> dict:
    return {
        "units": env.units,
        "outer": _ring(env.outer),
        "fixed_obstacles": [_ring(o) for o in env.fixed_obstacles],
        "stochastic_obstacles": [
            {"shape": _ring(s.shape), "placements": _ring(s.placements)}
            for s in env.stochastic_obstacles
        ],
    }


def dump_environment(env: Environment, path) -> None:
    write_json(path, environment_to_dict(env))


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def read_ap_points(path) -> np.ndarray:
    """AP coordinates from a plan file (or a bare list of points)."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [c["ap"] for c in data.get("clusters", [])]
    return np.asarray(data, dtype=float).reshape(-1, 2)
