"""Scripted opposition: difficulty presets driving the same control tree.

A profile is a policy preset plus an income multiplier and a reaction
delay. Reaction is modeled as a shrunken defense ring: raiders approach
at one cell per tick, so trimming the ring by N cells answers N ticks
later. Profiles ship as JSON so the ladder can be audited and edited.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .bt.engine import tick
from .bt.modulators import ModulatorSet, Policy, apply_modulators
from .engine.constants import DEFENSE_RADIUS
from .engine.serial import fnv1a64
from .engine.types import ActionSet, GameState

DIFFICULTY_RANGE = (1, 2, 3, 4, 5, 6)

# Per-seed style rolls, shared across difficulties so that for any one
# seed a higher level fields a strictly tougher opponent. Spread comes
# from an opening-style pick plus a timing streak on the attack supply.
# The eager style is an all-in melee timing: it discounts the income
# handicap, so its punch scales smoothly with difficulty.
_STYLES: tuple[dict[str, object], ...] = (
    {"attack_supply_threshold": -14, "worker_target_per_base": -2,
     "composition_weights": {"Melee": 1, "Ranged": 0, "Air": 0}},  # eager
    {},                                                            # standard
    {"attack_supply_threshold": +6, "worker_target_per_base": +2},  # greedy
)
_THRESHOLD_STREAK_SPAN = 9  # -4 .. +4 supply


@dataclass(frozen=True)
class OpponentProfile:
    difficulty: int
    name: str
    income_multiplier_milli: int
    reaction_ticks: int
    modulators: ModulatorSet

    @property
    def defense_radius(self) -> int:
        return max(2, DEFENSE_RADIUS - self.reaction_ticks)


@lru_cache(maxsize=1)
def load_profiles() -> dict[int, OpponentProfile]:
    text = resources.files("commandpost.data").joinpath(
        "opponent_profiles.json").read_text("utf-8")
    out: dict[int, OpponentProfile] = {}
    for key, entry in json.loads(text).items():
        difficulty = int(key)
        out[difficulty] = OpponentProfile(
            difficulty=difficulty,
            name=entry["name"],
            income_multiplier_milli=entry["income_multiplier_milli"],
            reaction_ticks=entry["reaction_ticks"],
            modulators=ModulatorSet.from_dict(entry["modulators"]),
        )
    return out


def get_profile(difficulty: int) -> OpponentProfile:
    profiles = load_profiles()
    if difficulty not in profiles:
        raise ValueError(f"difficulty must be one of {sorted(profiles)}, "
                         f"got {difficulty}")
    return profiles[difficulty]


@lru_cache(maxsize=512)
def opponent_policy(profile: OpponentProfile, seed: int) -> Policy:
    """Profile preset with a seed-rolled opening style, fixed per episode.

    The roll hashes the seed alone, so across difficulties one seed meets
    the same style against a stronger baseline. That keeps the ladder
    monotone seed by seed while still spreading outcomes within a level.
    """
    base = Policy(f"opponent-{profile.name}", profile.modulators, 0)
    roll = fnv1a64(f"opp:{seed}".encode())
    style = _STYLES[roll % len(_STYLES)]
    streak = ((roll >> 8) % _THRESHOLD_STREAK_SPAN
              - _THRESHOLD_STREAK_SPAN // 2)
    mods = profile.modulators
    deltas: dict[str, object] = {}
    threshold = max(4, mods.attack_supply_threshold
                    + style.get("attack_supply_threshold", 0) + streak)
    if threshold != mods.attack_supply_threshold:
        deltas["attack_supply_threshold"] = threshold
    workers = max(4, mods.worker_target_per_base
                  + style.get("worker_target_per_base", 0))
    if workers != mods.worker_target_per_base:
        deltas["worker_target_per_base"] = workers
    if "composition_weights" in style:
        deltas["composition_weights"] = style["composition_weights"]
    if not deltas:
        return base
    return Policy(base.policy_id,
                  apply_modulators(base, deltas).modulators, 0)


def opponent_actions(state: GameState, profile: OpponentProfile,
                     seed: int, faction_id: int = 1) -> ActionSet:
    """Deterministic orders for the scripted side this tick."""
    policy = opponent_policy(profile, seed)
    return tick(policy, state, faction_id,
                defense_radius=profile.defense_radius)
