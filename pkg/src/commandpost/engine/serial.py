"""Canonical serialization and state hashing.

The replay contract is bit-exact: a state serializes to key-ordered JSON
and hashes with 64-bit FNV-1a over those bytes. Hashes travel as fixed
16-char hex strings because 64-bit ints do not survive every JSON reader.
"""
from __future__ import annotations

import json
from typing import Any

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _fnv1a64_py(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


# The jit path exists because lockstep CI hashes every tick; the pure
# loop is ~60x slower but bit-identical, so the fallback stays correct.
try:
    import numba
    import numpy as _np

    @numba.njit(cache=True)
    def _fnv1a64_jit(data):  # pragma: no cover - thin wrapper
        h = numba.uint64(_FNV_OFFSET)
        p = numba.uint64(_FNV_PRIME)
        for i in range(data.shape[0]):
            h = (h ^ numba.uint64(data[i])) * p
        return h

    def fnv1a64(data: bytes) -> int:
        return int(_fnv1a64_jit(_np.frombuffer(data, dtype=_np.uint8)))

except Exception:  # pragma: no cover - exercised only without numba
    fnv1a64 = _fnv1a64_py


def hash_bytes(data: bytes) -> str:
    return f"{fnv1a64(data):016x}"


def hash_json(obj: Any) -> str:
    return hash_bytes(canonical_json(obj).encode("utf-8"))
