"""Numeric knobs a policy exposes and the delta algebra over them.

A delta is a sparse dict of replacement values; composition weights merge
per kind. Applying never touches the input policy: validation happens on
the merged candidate and a bad delta leaves the original as it was.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..engine.constants import COMBAT_KINDS


class ModulatorError(ValueError):
    """A modulator set or delta violates its contract."""


_DELTA_KEYS = frozenset({
    "composition_weights",
    "attack_supply_threshold",
    "worker_target_per_base",
    "max_bases",
    "build_turrets",
})


def _as_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModulatorError(f"{name} must be a number, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ModulatorError(f"{name} must be integral, got {value!r}")
        value = int(value)
    return value


@dataclass(frozen=True, slots=True)
class ModulatorSet:
    """Validated bundle of behavior knobs; immutable once built."""

    composition_weights: tuple[tuple[str, float], ...]
    attack_supply_threshold: int
    worker_target_per_base: int
    max_bases: int
    build_turrets: bool

    @classmethod
    def create(cls, *, composition_weights: dict[str, float],
               attack_supply_threshold: int, worker_target_per_base: int,
               max_bases: int, build_turrets: bool) -> ModulatorSet:
        weights = {}
        for kind in COMBAT_KINDS:
            weights[kind] = composition_weights.get(kind, 0)
        unknown = set(composition_weights) - set(COMBAT_KINDS)
        if unknown:
            raise ModulatorError(f"unknown composition kinds: {sorted(unknown)}")
        total = 0.0
        for kind, value in weights.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ModulatorError(f"weight for {kind} must be a number")
            if value < 0:
                raise ModulatorError(f"weight for {kind} must be non-negative")
            total += value
        if total <= 0:
            raise ModulatorError("composition weights must sum above zero")
        threshold = _as_int("attack_supply_threshold", attack_supply_threshold)
        if threshold < 0:
            raise ModulatorError("attack_supply_threshold must be non-negative")
        workers = _as_int("worker_target_per_base", worker_target_per_base)
        if workers < 1:
            raise ModulatorError("worker_target_per_base must be at least 1")
        bases = _as_int("max_bases", max_bases)
        if bases < 1:
            raise ModulatorError("max_bases must be at least 1")
        if not isinstance(build_turrets, bool):
            raise ModulatorError("build_turrets must be a boolean")
        return cls(
            composition_weights=tuple((k, float(weights[k])) for k in COMBAT_KINDS),
            attack_supply_threshold=threshold,
            worker_target_per_base=workers,
            max_bases=bases,
            build_turrets=build_turrets,
        )

    @property
    def weights(self) -> dict[str, float]:
        return dict(self.composition_weights)

    def to_dict(self) -> dict:
        return {
            "composition_weights": {k: v for k, v in self.composition_weights},
            "attack_supply_threshold": self.attack_supply_threshold,
            "worker_target_per_base": self.worker_target_per_base,
            "max_bases": self.max_bases,
            "build_turrets": self.build_turrets,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ModulatorSet:
        try:
            return cls.create(**data)
        except TypeError as exc:
            raise ModulatorError(f"malformed modulator set: {exc}") from None


@dataclass(frozen=True, slots=True)
class Policy:
    """A named preset plus its adjustment history counter."""

    policy_id: str
    modulators: ModulatorSet
    revision: int = 0

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "modulators": self.modulators.to_dict(),
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Policy:
        return cls(data["policy_id"], ModulatorSet.from_dict(data["modulators"]),
                   data["revision"])


def apply_modulators(policy: Policy, deltas: dict) -> Policy:
    """New policy with deltas folded in and the revision counter bumped."""
    if not isinstance(deltas, dict):
        raise ModulatorError("deltas must be a mapping")
    unknown = set(deltas) - _DELTA_KEYS
    if unknown:
        raise ModulatorError(f"unknown modulator fields: {sorted(unknown)}")
    merged = policy.modulators.to_dict()
    for key, value in deltas.items():
        if key == "composition_weights":
            if not isinstance(value, dict):
                raise ModulatorError("composition_weights delta must be a mapping")
            merged["composition_weights"] = {**merged["composition_weights"], **value}
        else:
            merged[key] = value
    candidate = ModulatorSet.create(**merged)
    return Policy(policy.policy_id, candidate, policy.revision + 1)
