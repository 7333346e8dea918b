"""Stat tables and fixed rules for the simulation.

Everything here is deliberately integer-valued so tick resolution stays
exact across platforms.
"""
from __future__ import annotations

# Unit kinds, alphabetical where order matters for tie-breaks.
WORKER = "Worker"
MELEE = "Melee"
RANGED = "Ranged"
AIR = "Air"
UNIT_KINDS = (WORKER, MELEE, RANGED, AIR)
COMBAT_KINDS = (AIR, MELEE, RANGED)

# Building kinds.
BASE = "Base"
SUPPLY_DEPOT = "SupplyDepot"
BARRACKS = "Barracks"
FACTORY = "Factory"
AIRPORT = "Airport"
TURRET = "Turret"
BUILDING_KINDS = (BASE, SUPPLY_DEPOT, BARRACKS, FACTORY, AIRPORT, TURRET)

TAG_GROUND = "ground"
TAG_AIR = "air"
TAG_ARMORED = "armored"


class UnitStats:
    __slots__ = ("hp", "damage", "attack_range", "speed", "supply",
                 "mineral_cost", "gas_cost", "build_ticks", "tags")

    def __init__(self, hp: int, damage: int, attack_range: int, speed: int,
                 supply: int, mineral_cost: int, gas_cost: int,
                 build_ticks: int, tags: tuple[str, ...]):
        self.hp = hp
        self.damage = damage
        self.attack_range = attack_range
        self.speed = speed
        self.supply = supply
        self.mineral_cost = mineral_cost
        self.gas_cost = gas_cost
        self.build_ticks = build_ticks
        self.tags = tags


class BuildingStats:
    __slots__ = ("hp", "mineral_cost", "gas_cost", "supply_provided",
                 "damage", "attack_range")

    def __init__(self, hp: int, mineral_cost: int, gas_cost: int,
                 supply_provided: int, damage: int = 0, attack_range: int = 0):
        self.hp = hp
        self.mineral_cost = mineral_cost
        self.gas_cost = gas_cost
        self.supply_provided = supply_provided
        self.damage = damage
        self.attack_range = attack_range


UNIT_STATS: dict[str, UnitStats] = {
    WORKER: UnitStats(40, 0, 0, 1, 1, 50, 0, 15, (TAG_GROUND,)),
    MELEE: UnitStats(60, 5, 1, 1, 1, 50, 0, 15, (TAG_GROUND,)),
    RANGED: UnitStats(60, 6, 3, 1, 2, 75, 25, 20, (TAG_GROUND, TAG_ARMORED)),
    AIR: UnitStats(80, 7, 2, 2, 3, 100, 75, 30, (TAG_AIR,)),
}

BUILDING_STATS: dict[str, BuildingStats] = {
    BASE: BuildingStats(500, 300, 0, 10),
    SUPPLY_DEPOT: BuildingStats(150, 100, 0, 8),
    BARRACKS: BuildingStats(200, 150, 0, 0),
    FACTORY: BuildingStats(250, 150, 50, 0),
    AIRPORT: BuildingStats(250, 150, 100, 0),
    TURRET: BuildingStats(200, 100, 0, 0, damage=8, attack_range=4),
}

# Each combat kind comes from exactly one producer; Base is the only
# worker producer.
PRODUCER_FOR: dict[str, str] = {
    WORKER: BASE,
    MELEE: BARRACKS,
    RANGED: FACTORY,
    AIR: AIRPORT,
}

# Attack bonuses shaping the counter triangle: melee swarms cheaply,
# ranged punishes fliers, fliers punish melee.
RANGED_VS_AIR_BONUS = 4
AIR_VS_MELEE_BONUS = 3

MINERAL_HARVEST_TICKS = 8    # one mineral per assigned worker per cycle
GAS_HARVEST_TICKS = 10
GEYSER_WORKER_LIMIT = 3

PRODUCTION_QUEUE_LIMIT = 5
SUPPLY_CAP_MAX = 200
DEFENSE_RADIUS = 14          # enemy unit inside this ring of a Base counts as a raid
TURRETS_PER_BASE_LIMIT = 4

DEFAULT_MAP_SIZE = 32
DEFAULT_TICK_LIMIT = 20_000
DEFAULT_STARTING_WORKERS = 6
DEFAULT_STARTING_MINERALS = 50
# Seed-derived bonus bank in [0, jitter) applied per faction at reset; the
# only randomness in the sim, so distinct seeds produce distinct openings.
DEFAULT_START_BANK_JITTER = 25

MINERAL_KIND = "mineral"
GAS_KIND = "gas"


def attack_damage(attacker_kind: str, target_kind: str, target_tags: tuple[str, ...]) -> int:
    """Damage one attack deals, bonuses included. Unknown kinds are a bug."""
    base = UNIT_STATS[attacker_kind].damage
    if attacker_kind == RANGED and TAG_AIR in target_tags:
        return base + RANGED_VS_AIR_BONUS
    if attacker_kind == AIR and target_kind == MELEE:
        return base + AIR_VS_MELEE_BONUS
    return base
