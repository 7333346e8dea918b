"""Data model for the simulation: config, state, commands, results.

State objects are mutable and owned by whoever steps the sim; everything
exposes ``to_dict`` so snapshots, logs, and the wire all share one
canonical shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .constants import (
    BASE,
    BUILDING_STATS,
    DEFAULT_MAP_SIZE,
    DEFAULT_START_BANK_JITTER,
    DEFAULT_STARTING_MINERALS,
    DEFAULT_STARTING_WORKERS,
    DEFAULT_TICK_LIMIT,
    GAS_KIND,
    MINERAL_KIND,
    UNIT_STATS,
)


class EngineError(Exception):
    """Base class for simulation failures."""


class ConfigError(EngineError, ValueError):
    """Raised when a GameConfig violates its invariants."""


class TerminalStateError(EngineError, RuntimeError):
    """Raised when stepping a state whose episode already ended."""


# Order kinds a unit can carry between ticks.
ORDER_IDLE = "idle"
ORDER_MOVE = "move"
ORDER_ATTACK = "attack"
ORDER_HARVEST = "harvest"

# Event types emitted by step().
EVENT_UNIT_DIED = "unit_died"
EVENT_BUILDING_DESTROYED = "building_destroyed"
EVENT_PRODUCTION_COMPLETE = "production_complete"
EVENT_RESOURCE_EXHAUSTED = "resource_exhausted"

TERMINAL_DRAW = "draw"


def winner_terminal(faction_id: int) -> str:
    return f"winner:{faction_id}"


def chebyshev(ax: int, ay: int, bx: int, by: int) -> int:
    dx = ax - bx
    if dx < 0:
        dx = -dx
    dy = ay - by
    if dy < 0:
        dy = -dy
    return dx if dx > dy else dy


@dataclass(frozen=True)
class GameConfig:
    """Immutable episode setup. Invalid combinations fail fast here."""

    width: int = DEFAULT_MAP_SIZE
    height: int = DEFAULT_MAP_SIZE
    start_locations: tuple[tuple[int, int], tuple[int, int]] = ((4, 4), (27, 27))
    starting_workers: int = DEFAULT_STARTING_WORKERS
    starting_base_hp: int = BUILDING_STATS[BASE].hp
    starting_minerals: int = DEFAULT_STARTING_MINERALS
    starting_gas: int = 0
    start_bank_jitter: int = DEFAULT_START_BANK_JITTER
    # (x, y, kind, amount) per node; order defines node indices.
    resource_layout: tuple[tuple[int, int, str, int], ...] = ()
    rng_seed: int = 0
    tick_limit: int = DEFAULT_TICK_LIMIT
    income_multiplier_milli: tuple[int, int] = (1000, 1000)

    def __post_init__(self) -> None:
        if self.width < 8 or self.height < 8:
            raise ConfigError(f"map must be at least 8x8, got {self.width}x{self.height}")
        if len(self.start_locations) != 2:
            raise ConfigError("exactly two faction start locations required")
        for x, y in self.start_locations:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigError(f"start location ({x}, {y}) outside map")
        for i, (x, y, kind, amount) in enumerate(self.resource_layout):
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigError(f"resource node {i} at ({x}, {y}) outside map")
            if kind not in (MINERAL_KIND, GAS_KIND):
                raise ConfigError(f"resource node {i} has unknown kind {kind!r}")
            if amount <= 0:
                raise ConfigError(f"resource node {i} must hold a positive amount")
        if not (0 <= self.rng_seed < 2**64):
            raise ConfigError("rng_seed must fit in 64 bits")
        if self.tick_limit < 1:
            raise ConfigError("tick_limit must be positive")
        if self.starting_workers < 0:
            raise ConfigError("starting_workers must be non-negative")
        if not (0 < self.starting_base_hp <= BUILDING_STATS[BASE].hp):
            raise ConfigError("starting_base_hp must be in (0, max hp]")
        if self.start_bank_jitter < 0:
            raise ConfigError("start_bank_jitter must be non-negative")
        for m in self.income_multiplier_milli:
            if m <= 0:
                raise ConfigError("income multipliers must be positive")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "start_locations": [list(p) for p in self.start_locations],
            "starting_workers": self.starting_workers,
            "starting_base_hp": self.starting_base_hp,
            "starting_minerals": self.starting_minerals,
            "starting_gas": self.starting_gas,
            "start_bank_jitter": self.start_bank_jitter,
            "resource_layout": [list(n) for n in self.resource_layout],
            "rng_seed": self.rng_seed,
            "tick_limit": self.tick_limit,
            "income_multiplier_milli": list(self.income_multiplier_milli),
        }

    @classmethod
    def from_dict(cls, data: dict) -> GameConfig:
        return cls(
            width=data["width"],
            height=data["height"],
            start_locations=tuple(tuple(p) for p in data["start_locations"]),
            starting_workers=data["starting_workers"],
            starting_base_hp=data["starting_base_hp"],
            starting_minerals=data["starting_minerals"],
            starting_gas=data["starting_gas"],
            start_bank_jitter=data["start_bank_jitter"],
            resource_layout=tuple(tuple(n) for n in data["resource_layout"]),
            rng_seed=data["rng_seed"],
            tick_limit=data["tick_limit"],
            income_multiplier_milli=tuple(data["income_multiplier_milli"]),
        )


def default_resource_layout() -> tuple[tuple[int, int, str, int], ...]:
    """Mirrored clusters: a main per start plus two neutral naturals."""
    return (
        # faction 0 main around (4, 4)
        (2, 4, MINERAL_KIND, 1500),
        (4, 2, MINERAL_KIND, 1500),
        (2, 2, MINERAL_KIND, 1500),
        (6, 2, GAS_KIND, 800),
        # faction 1 main around (27, 27)
        (29, 27, MINERAL_KIND, 1500),
        (27, 29, MINERAL_KIND, 1500),
        (29, 29, MINERAL_KIND, 1500),
        (25, 29, GAS_KIND, 800),
        # naturals, contested
        (2, 27, MINERAL_KIND, 1200),
        (4, 29, MINERAL_KIND, 1200),
        (2, 29, MINERAL_KIND, 1200),
        (6, 29, GAS_KIND, 800),
        (29, 4, MINERAL_KIND, 1200),
        (27, 2, MINERAL_KIND, 1200),
        (29, 2, MINERAL_KIND, 1200),
        (25, 2, GAS_KIND, 800),
    )


def default_config(rng_seed: int = 0, **overrides) -> GameConfig:
    kwargs: dict = {"rng_seed": rng_seed, "resource_layout": default_resource_layout()}
    kwargs.update(overrides)
    return GameConfig(**kwargs)


@dataclass(slots=True)
class Unit:
    id: int
    kind: str
    x: int
    y: int
    hp: int
    order: str = ORDER_IDLE
    target_x: int = 0
    target_y: int = 0
    node_index: int = -1
    harvest_progress: int = 0

    def set_idle(self) -> None:
        self.order = ORDER_IDLE
        self.node_index = -1
        self.harvest_progress = 0

    def set_move(self, x: int, y: int) -> None:
        self.order = ORDER_MOVE
        self.target_x = x
        self.target_y = y
        self.node_index = -1
        self.harvest_progress = 0

    def set_attack(self, x: int, y: int) -> None:
        self.order = ORDER_ATTACK
        self.target_x = x
        self.target_y = y
        self.node_index = -1
        self.harvest_progress = 0

    def set_harvest(self, node_index: int) -> None:
        self.order = ORDER_HARVEST
        self.node_index = node_index
        self.harvest_progress = 0

    def order_dict(self) -> dict:
        if self.order == ORDER_IDLE:
            return {"type": ORDER_IDLE}
        if self.order == ORDER_HARVEST:
            return {"type": ORDER_HARVEST, "node": self.node_index,
                    "progress": self.harvest_progress}
        return {"type": self.order, "target": [self.target_x, self.target_y]}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "pos": [self.x, self.y],
            "hp": self.hp,
            "tags": list(UNIT_STATS[self.kind].tags),
            "order": self.order_dict(),
        }


@dataclass(slots=True)
class Building:
    id: int
    kind: str
    x: int
    y: int
    hp: int
    # [kind, ticks_remaining] pairs; only the head progresses.
    queue: list[list] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "pos": [self.x, self.y],
            "hp": self.hp,
            "queue": [[k, t] for k, t in self.queue],
        }


@dataclass(slots=True)
class ResourceNode:
    index: int
    x: int
    y: int
    kind: str
    amount_milli: int

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "pos": [self.x, self.y],
            "kind": self.kind,
            "amount_milli": self.amount_milli,
        }


@dataclass(slots=True)
class FactionState:
    id: int
    start_x: int
    start_y: int
    minerals: int
    gas: int
    starting_minerals: int
    starting_gas: int
    income_multiplier_milli: int = 1000
    mineral_credit_milli: int = 0
    gas_credit_milli: int = 0
    mined_mineral_milli: int = 0
    mined_gas_milli: int = 0
    spent_minerals: int = 0
    spent_gas: int = 0
    supply_used: int = 0
    supply_cap: int = 0
    units: list[Unit] = field(default_factory=list)
    buildings: list[Building] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "start": [self.start_x, self.start_y],
            "minerals": self.minerals,
            "gas": self.gas,
            "starting_minerals": self.starting_minerals,
            "starting_gas": self.starting_gas,
            "income_multiplier_milli": self.income_multiplier_milli,
            "mineral_credit_milli": self.mineral_credit_milli,
            "gas_credit_milli": self.gas_credit_milli,
            "mined_mineral_milli": self.mined_mineral_milli,
            "mined_gas_milli": self.mined_gas_milli,
            "spent_minerals": self.spent_minerals,
            "spent_gas": self.spent_gas,
            "supply_used": self.supply_used,
            "supply_cap": self.supply_cap,
            "units": [u.to_dict() for u in self.units],
            "buildings": [b.to_dict() for b in self.buildings],
        }


@dataclass(slots=True)
class GameState:
    width: int
    height: int
    tick_limit: int
    tick: int = 0
    next_entity_id: int = 1
    terminal: str | None = None
    factions: list[FactionState] = field(default_factory=list)
    nodes: list[ResourceNode] = field(default_factory=list)

    @property
    def is_terminal(self) -> bool:
        return self.terminal is not None

    @property
    def winner(self) -> int | None:
        if self.terminal and self.terminal.startswith("winner:"):
            return int(self.terminal.split(":", 1)[1])
        return None

    def faction(self, faction_id: int) -> FactionState:
        return self.factions[faction_id]

    def enemy(self, faction_id: int) -> FactionState:
        return self.factions[1 - faction_id]

    def allocate_id(self) -> int:
        # Entity ids strictly increase and are never reused.
        out = self.next_entity_id
        self.next_entity_id = out + 1
        return out

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "width": self.width,
            "height": self.height,
            "tick_limit": self.tick_limit,
            "next_entity_id": self.next_entity_id,
            "terminal": self.terminal,
            "factions": [f.to_dict() for f in self.factions],
            "nodes": [n.to_dict() for n in self.nodes],
        }


# Command kinds accepted by step().
CMD_BUILD_UNIT = "build_unit"
CMD_BUILD_STRUCTURE = "build_structure"
CMD_ASSIGN_WORKER = "assign_worker"
CMD_MOVE = "move"
CMD_ATTACK = "attack"
CMD_STOP = "stop"


@dataclass(slots=True)
class Command:
    kind: str
    unit: int = -1
    building: int = -1
    unit_kind: str = ""
    structure: str = ""
    node: int = -1
    x: int = 0
    y: int = 0

    @classmethod
    def build_unit(cls, building_id: int, unit_kind: str) -> Command:
        return cls(CMD_BUILD_UNIT, building=building_id, unit_kind=unit_kind)

    @classmethod
    def build_structure(cls, structure: str, x: int, y: int) -> Command:
        return cls(CMD_BUILD_STRUCTURE, structure=structure, x=x, y=y)

    @classmethod
    def assign_worker(cls, unit_id: int, node_index: int) -> Command:
        return cls(CMD_ASSIGN_WORKER, unit=unit_id, node=node_index)

    @classmethod
    def move(cls, unit_id: int, x: int, y: int) -> Command:
        return cls(CMD_MOVE, unit=unit_id, x=x, y=y)

    @classmethod
    def attack(cls, unit_id: int, x: int, y: int) -> Command:
        return cls(CMD_ATTACK, unit=unit_id, x=x, y=y)

    @classmethod
    def stop(cls, unit_id: int) -> Command:
        return cls(CMD_STOP, unit=unit_id)

    def subject(self) -> int | None:
        """Entity a command addresses; None for faction-level commands."""
        if self.kind == CMD_BUILD_UNIT:
            return self.building
        if self.kind == CMD_BUILD_STRUCTURE:
            return None
        return self.unit

    def to_dict(self) -> dict:
        if self.kind == CMD_BUILD_UNIT:
            return {"type": self.kind, "building": self.building, "unit_kind": self.unit_kind}
        if self.kind == CMD_BUILD_STRUCTURE:
            return {"type": self.kind, "structure": self.structure, "cell": [self.x, self.y]}
        if self.kind == CMD_ASSIGN_WORKER:
            return {"type": self.kind, "unit": self.unit, "node": self.node}
        if self.kind == CMD_STOP:
            return {"type": self.kind, "unit": self.unit}
        return {"type": self.kind, "unit": self.unit, "cell": [self.x, self.y]}

    @classmethod
    def from_dict(cls, data: dict) -> Command:
        kind = data["type"]
        if kind == CMD_BUILD_UNIT:
            return cls.build_unit(data["building"], data["unit_kind"])
        if kind == CMD_BUILD_STRUCTURE:
            return cls.build_structure(data["structure"], *data["cell"])
        if kind == CMD_ASSIGN_WORKER:
            return cls.assign_worker(data["unit"], data["node"])
        if kind == CMD_MOVE:
            return cls.move(data["unit"], *data["cell"])
        if kind == CMD_ATTACK:
            return cls.attack(data["unit"], *data["cell"])
        if kind == CMD_STOP:
            return cls.stop(data["unit"])
        raise ValueError(f"unknown command type {kind!r}")


@dataclass(slots=True)
class ActionSet:
    faction_id: int
    commands: list[Command] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"faction": self.faction_id,
                "commands": [c.to_dict() for c in self.commands]}

    @classmethod
    def from_dict(cls, data: dict) -> ActionSet:
        return cls(data["faction"], [Command.from_dict(c) for c in data["commands"]])


@dataclass(slots=True)
class TickResult:
    """Outcome of one step: reward is terminal-only, events are this tick's."""

    reward: int = 0
    events: list[dict] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
