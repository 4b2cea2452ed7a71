"""Small serialization helpers: canonical hashing and float formatting.

CSV floats are written with %.17g so that a write/read cycle reproduces the
exact binary double.
"""

import hashlib
import json

import numpy as np

FLOAT_FMT = "%.17g"


def format_float(x) -> str:
    return FLOAT_FMT % float(x)


def to_jsonable(obj):
    """Recursively convert numpy containers into plain Python types."""
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    # bool first: Python bools are ints and would otherwise serialize as 0/1
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(to_jsonable(v) for v in obj)
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON encoding: sorted keys, no whitespace drift."""
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_digest(obj) -> str:
    """Short stable hash of a configuration payload."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)
