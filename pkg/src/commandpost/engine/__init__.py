"""Deterministic skirmish simulation: state, stepping, hashing."""
from .constants import (
    AIR,
    BARRACKS,
    BASE,
    AIRPORT,
    BUILDING_KINDS,
    BUILDING_STATS,
    COMBAT_KINDS,
    DEFENSE_RADIUS,
    FACTORY,
    GAS_KIND,
    MELEE,
    MINERAL_KIND,
    PRODUCER_FOR,
    RANGED,
    SUPPLY_DEPOT,
    TURRET,
    UNIT_KINDS,
    UNIT_STATS,
    WORKER,
    attack_damage,
)
from .serial import canonical_json, fnv1a64, hash_bytes, hash_json
from .sim import (
    check_victory,
    count_assigned,
    merge_manual_actions,
    raid_alarm,
    reset,
    serialize_state,
    state_hash,
    step,
)
from .types import (
    ActionSet,
    Building,
    Command,
    ConfigError,
    EngineError,
    FactionState,
    GameConfig,
    GameState,
    ResourceNode,
    TERMINAL_DRAW,
    TerminalStateError,
    TickResult,
    Unit,
    chebyshev,
    default_config,
    default_resource_layout,
)

__all__ = [
    "ActionSet", "Building", "Command", "ConfigError", "EngineError",
    "FactionState", "GameConfig", "GameState", "ResourceNode", "TickResult",
    "Unit", "TERMINAL_DRAW", "TerminalStateError",
    "reset", "step", "check_victory", "merge_manual_actions", "raid_alarm",
    "count_assigned", "serialize_state", "state_hash", "chebyshev",
    "default_config", "default_resource_layout",
    "canonical_json", "fnv1a64", "hash_bytes", "hash_json",
    "AIR", "AIRPORT", "BARRACKS", "BASE", "BUILDING_KINDS", "BUILDING_STATS",
    "COMBAT_KINDS", "DEFENSE_RADIUS", "FACTORY", "GAS_KIND", "MELEE",
    "MINERAL_KIND", "PRODUCER_FOR", "RANGED", "SUPPLY_DEPOT", "TURRET",
    "UNIT_KINDS", "UNIT_STATS", "WORKER", "attack_damage",
]
