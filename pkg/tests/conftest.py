"""Shared builders for tests. Everything here is deterministic."""
from __future__ import annotations

import pytest

from commandpost.engine import (
    BUILDING_STATS,
    GameConfig,
    GameState,
    UNIT_STATS,
    Building,
    Unit,
    reset,
)


def make_config(**overrides) -> GameConfig:
    """Small bare map with no opening-bank jitter so arithmetic stays exact."""
    base = dict(
        width=16,
        height=16,
        start_locations=((2, 2), (13, 13)),
        starting_workers=0,
        starting_minerals=50,
        start_bank_jitter=0,
        resource_layout=(),
        rng_seed=0,
        tick_limit=1000,
    )
    base.update(overrides)
    return GameConfig(**base)


def fresh_state(**overrides) -> GameState:
    return reset(make_config(**overrides))


def add_unit(state: GameState, *, faction: int, kind: str,
             x: int, y: int, hp: int | None = None) -> Unit:
    unit = Unit(state.allocate_id(), kind, x, y,
                UNIT_STATS[kind].hp if hp is None else hp)
    side = state.factions[faction]
    side.units.append(unit)
    side.supply_used += UNIT_STATS[kind].supply
    return unit


def add_building(state: GameState, *, faction: int, kind: str,
                 x: int, y: int, hp: int | None = None) -> Building:
    building = Building(state.allocate_id(), kind, x, y,
                        BUILDING_STATS[kind].hp if hp is None else hp)
    state.factions[faction].buildings.append(building)
    return building


@pytest.fixture
def bare_state() -> GameState:
    return fresh_state()
