"""Named policy presets shipped as package data."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .modulators import ModulatorSet, Policy


class UnknownPolicyError(KeyError):
    """Requested preset is not in the library."""


@dataclass(frozen=True)
class PolicyPreset:
    name: str
    description: str
    modulators: ModulatorSet


@lru_cache(maxsize=1)
def load_policy_library() -> dict[str, PolicyPreset]:
    text = resources.files("commandpost.data").joinpath(
        "policies.json").read_text("utf-8")
    out: dict[str, PolicyPreset] = {}
    for name, entry in json.loads(text).items():
        out[name] = PolicyPreset(
            name=name,
            description=entry["description"],
            modulators=ModulatorSet.from_dict(entry["modulators"]),
        )
    return out


def make_policy(name: str, revision: int = 0) -> Policy:
    library = load_policy_library()
    if name not in library:
        raise UnknownPolicyError(name)
    return Policy(name, library[name].modulators, revision)


def library_digest(library: dict[str, PolicyPreset] | None = None) -> str:
    presets = load_policy_library() if library is None else library
    return "\n".join(f"- {name}: {p.description}"
                     for name, p in sorted(presets.items()))
