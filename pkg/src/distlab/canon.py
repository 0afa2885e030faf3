"""Canonical textual serialization for states, actions and payloads.

Everything the lab logs, hashes or sorts goes through `canon` so that the
same value always produces the same text, independent of dict insertion
order, set iteration order or process memory layout.  The format is meant
for determinism and diffing, not for parsing back.
"""

import dataclasses
import enum


def canon(value) -> str:
    if value is None or value is True or value is False:
        return repr(value)
    if isinstance(value, enum.Enum):
        return f"{type(value).__name__}.{value.name}"
    if isinstance(value, (int, str, bytes)):
        return repr(value)
    if isinstance(value, float):
        # repr is the shortest round-tripping form, stable across runs
        return repr(value)
    if isinstance(value, tuple):
        return "(" + ",".join(canon(v) for v in value) + ")"
    if isinstance(value, list):
        return "[" + ",".join(canon(v) for v in value) + "]"
    if isinstance(value, (set, frozenset)):
        return "{" + ",".join(sorted(canon(v) for v in value)) + "}"
    if isinstance(value, dict):
        items = sorted((canon(k), canon(v)) for k, v in value.items())
        return "{" + ",".join(f"{k}:{v}" for k, v in items) + "}"
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        fields = ",".join(
            f"{f.name}={canon(getattr(value, f.name))}"
            for f in dataclasses.fields(value)
        )
        return f"{type(value).__name__}({fields})"
    raise TypeError(f"no canonical form for {type(value).__name__}: {value!r}")


def canon_key(value):
    """Sort key usable for any mix of canonicalizable values."""
    return canon(value)
