"""Tick resolution for the deterministic skirmish sim.

Phase order inside ``step`` is fixed and load-bearing for replay:
orders, production, movement, combat, harvest, deaths, victory.
No randomness enters after ``reset``; seeds only shape the opening bank.
"""
from __future__ import annotations

import logging

from .constants import (
    BASE,
    BUILDING_STATS,
    DEFENSE_RADIUS,
    GAS_HARVEST_TICKS,
    GAS_KIND,
    GEYSER_WORKER_LIMIT,
    MINERAL_HARVEST_TICKS,
    PRODUCER_FOR,
    PRODUCTION_QUEUE_LIMIT,
    SUPPLY_CAP_MAX,
    TURRET,
    UNIT_STATS,
    WORKER,
    attack_damage,
)
from .serial import canonical_json, fnv1a64, hash_bytes
from .types import (
    ActionSet,
    Building,
    CMD_ASSIGN_WORKER,
    CMD_ATTACK,
    CMD_BUILD_STRUCTURE,
    CMD_BUILD_UNIT,
    CMD_MOVE,
    CMD_STOP,
    EVENT_BUILDING_DESTROYED,
    EVENT_PRODUCTION_COMPLETE,
    EVENT_RESOURCE_EXHAUSTED,
    EVENT_UNIT_DIED,
    FactionState,
    GameConfig,
    GameState,
    ORDER_ATTACK,
    ORDER_HARVEST,
    ORDER_IDLE,
    ORDER_MOVE,
    ResourceNode,
    TERMINAL_DRAW,
    TerminalStateError,
    TickResult,
    Unit,
    chebyshev,
    winner_terminal,
)

log = logging.getLogger(__name__)


def _opening_bank_bonus(seed: int, faction_id: int, jitter: int) -> int:
    if jitter == 0:
        return 0
    return fnv1a64(f"bank:{seed}:{faction_id}".encode()) % jitter


def reset(config: GameConfig) -> GameState:
    """Build the starting state. Identical configs yield identical states."""
    state = GameState(width=config.width, height=config.height,
                      tick_limit=config.tick_limit)
    for idx, (x, y, kind, amount) in enumerate(config.resource_layout):
        state.nodes.append(ResourceNode(idx, x, y, kind, amount * 1000))
    for fid in (0, 1):
        sx, sy = config.start_locations[fid]
        bank = config.starting_minerals + _opening_bank_bonus(
            config.rng_seed, fid, config.start_bank_jitter)
        faction = FactionState(
            id=fid, start_x=sx, start_y=sy,
            minerals=bank, gas=config.starting_gas,
            starting_minerals=bank, starting_gas=config.starting_gas,
            income_multiplier_milli=config.income_multiplier_milli[fid],
        )
        base = Building(state.allocate_id(), BASE, sx, sy, config.starting_base_hp)
        faction.buildings.append(base)
        worker_stats = UNIT_STATS[WORKER]
        for _ in range(config.starting_workers):
            faction.units.append(
                Unit(state.allocate_id(), WORKER, sx, sy, worker_stats.hp))
        faction.supply_used = config.starting_workers * worker_stats.supply
        faction.supply_cap = min(SUPPLY_CAP_MAX, BUILDING_STATS[BASE].supply_provided)
        state.factions.append(faction)
    return state


def serialize_state(state: GameState) -> str:
    return canonical_json(state.to_dict())


def state_hash(state: GameState) -> str:
    return hash_bytes(serialize_state(state).encode("utf-8"))


def check_victory(state: GameState) -> str | None:
    """Terminal marker the state has earned, or None while play continues."""
    alive0 = len(state.factions[0].buildings) > 0
    alive1 = len(state.factions[1].buildings) > 0
    if not alive0 and not alive1:
        return TERMINAL_DRAW
    if not alive1:
        return winner_terminal(0)
    if not alive0:
        return winner_terminal(1)
    if state.tick >= state.tick_limit:
        return TERMINAL_DRAW
    return None


def merge_manual_actions(bt_actions: ActionSet, manual_actions: ActionSet) -> ActionSet:
    """Manual commands win per addressed entity; the rest is a union."""
    if bt_actions.faction_id != manual_actions.faction_id:
        raise ValueError("cannot merge action sets from different factions")
    if not manual_actions.commands:
        return ActionSet(bt_actions.faction_id, list(bt_actions.commands))
    taken = {c.subject() for c in manual_actions.commands}
    taken.discard(None)
    merged = [c for c in bt_actions.commands if c.subject() not in taken]
    merged.extend(manual_actions.commands)
    return ActionSet(bt_actions.faction_id, merged)


def raid_alarm(state: GameState, faction_id: int,
               radius: int = DEFENSE_RADIUS) -> Building | None:
    """Lowest-id own Base with an enemy unit inside the defense ring."""
    enemy_units = state.factions[1 - faction_id].units
    for building in state.factions[faction_id].buildings:
        if building.kind != BASE:
            continue
        bx, by = building.x, building.y
        for unit in enemy_units:
            if chebyshev(unit.x, unit.y, bx, by) <= radius:
                return building
    return None


def count_assigned(faction: FactionState, node_index: int) -> int:
    n = 0
    for unit in faction.units:
        if unit.order == ORDER_HARVEST and unit.node_index == node_index:
            n += 1
    return n


def _recompute_supply_cap(faction: FactionState) -> None:
    cap = 0
    for b in faction.buildings:
        cap += BUILDING_STATS[b.kind].supply_provided
    faction.supply_cap = min(SUPPLY_CAP_MAX, cap)


def _queued_supply(faction: FactionState) -> int:
    total = 0
    for b in faction.buildings:
        for kind, _ in b.queue:
            total += UNIT_STATS[kind].supply
    return total


def _apply_commands(state: GameState, faction: FactionState,
                    actions: ActionSet, dropped: list[str]) -> None:
    fid = faction.id
    units_by_id = {u.id: u for u in faction.units}
    buildings_by_id = {b.id: b for b in faction.buildings}
    occupied = {(b.x, b.y)
                for f in state.factions
                for b in f.buildings}
    pending_supply = _queued_supply(faction)

    def drop(cmd, reason: str) -> None:
        dropped.append(f"f{fid} {cmd.kind}: {reason}")

    for cmd in actions.commands:
        kind = cmd.kind
        if kind == CMD_BUILD_UNIT:
            building = buildings_by_id.get(cmd.building)
            stats = UNIT_STATS.get(cmd.unit_kind)
            if building is None:
                drop(cmd, f"no building {cmd.building}")
            elif stats is None:
                drop(cmd, f"unknown unit kind {cmd.unit_kind!r}")
            elif PRODUCER_FOR[cmd.unit_kind] != building.kind:
                drop(cmd, f"{building.kind} cannot train {cmd.unit_kind}")
            elif len(building.queue) >= PRODUCTION_QUEUE_LIMIT:
                drop(cmd, "production queue full")
            elif faction.minerals < stats.mineral_cost or faction.gas < stats.gas_cost:
                drop(cmd, f"cannot afford {cmd.unit_kind}")
            elif faction.supply_used + pending_supply + stats.supply > faction.supply_cap:
                drop(cmd, f"supply blocked for {cmd.unit_kind}")
            else:
                faction.minerals -= stats.mineral_cost
                faction.gas -= stats.gas_cost
                faction.spent_minerals += stats.mineral_cost
                faction.spent_gas += stats.gas_cost
                building.queue.append([cmd.unit_kind, stats.build_ticks])
                pending_supply += stats.supply
        elif kind == CMD_BUILD_STRUCTURE:
            stats = BUILDING_STATS.get(cmd.structure)
            if stats is None:
                drop(cmd, f"unknown structure {cmd.structure!r}")
            elif not (0 <= cmd.x < state.width and 0 <= cmd.y < state.height):
                drop(cmd, "placement outside map")
            elif (cmd.x, cmd.y) in occupied:
                drop(cmd, "cell already holds a building")
            elif faction.minerals < stats.mineral_cost or faction.gas < stats.gas_cost:
                drop(cmd, f"cannot afford {cmd.structure}")
            else:
                faction.minerals -= stats.mineral_cost
                faction.gas -= stats.gas_cost
                faction.spent_minerals += stats.mineral_cost
                faction.spent_gas += stats.gas_cost
                new = Building(state.allocate_id(), cmd.structure, cmd.x, cmd.y, stats.hp)
                faction.buildings.append(new)
                buildings_by_id[new.id] = new
                occupied.add((cmd.x, cmd.y))
                _recompute_supply_cap(faction)
        elif kind == CMD_ASSIGN_WORKER:
            unit = units_by_id.get(cmd.unit)
            if unit is None or unit.kind != WORKER:
                drop(cmd, f"no worker {cmd.unit}")
            elif not (0 <= cmd.node < len(state.nodes)):
                drop(cmd, f"no resource node {cmd.node}")
            elif state.nodes[cmd.node].amount_milli <= 0:
                drop(cmd, f"node {cmd.node} is exhausted")
            elif (state.nodes[cmd.node].kind == GAS_KIND
                  and count_assigned(faction, cmd.node) >= GEYSER_WORKER_LIMIT):
                drop(cmd, f"geyser {cmd.node} is saturated")
            else:
                unit.set_harvest(cmd.node)
        elif kind == CMD_MOVE:
            unit = units_by_id.get(cmd.unit)
            if unit is None:
                drop(cmd, f"no unit {cmd.unit}")
            elif not (0 <= cmd.x < state.width and 0 <= cmd.y < state.height):
                drop(cmd, "move target outside map")
            else:
                unit.set_move(cmd.x, cmd.y)
        elif kind == CMD_ATTACK:
            unit = units_by_id.get(cmd.unit)
            if unit is None:
                drop(cmd, f"no unit {cmd.unit}")
            elif UNIT_STATS[unit.kind].damage <= 0:
                drop(cmd, f"{unit.kind} cannot attack")
            elif not (0 <= cmd.x < state.width and 0 <= cmd.y < state.height):
                drop(cmd, "attack target outside map")
            else:
                unit.set_attack(cmd.x, cmd.y)
        elif kind == CMD_STOP:
            unit = units_by_id.get(cmd.unit)
            if unit is None:
                drop(cmd, f"no unit {cmd.unit}")
            else:
                unit.set_idle()
        else:
            drop(cmd, f"unknown command {kind!r}")


def _advance_production(state: GameState, events: list[dict]) -> None:
    for faction in state.factions:
        for building in faction.buildings:
            queue = building.queue
            if not queue:
                continue
            head = queue[0]
            head[1] -= 1
            if head[1] > 0:
                continue
            queue.pop(0)
            kind = head[0]
            stats = UNIT_STATS[kind]
            unit = Unit(state.allocate_id(), kind, building.x, building.y, stats.hp)
            faction.units.append(unit)
            faction.supply_used += stats.supply
            events.append({"type": EVENT_PRODUCTION_COMPLETE, "faction": faction.id,
                           "building": building.id, "unit": unit.id, "kind": kind})


def _enemy_positions(state: GameState, faction_id: int) -> list[tuple[int, int]]:
    enemy = state.factions[1 - faction_id]
    out = [(u.x, u.y) for u in enemy.units]
    out.extend((b.x, b.y) for b in enemy.buildings)
    return out


def _move_units(state: GameState) -> None:
    # Engagement decisions freeze at phase start so neither side profits
    # from resolution order.
    frozen = [_enemy_positions(state, 0), _enemy_positions(state, 1)]
    planned: list[tuple[Unit, int]] = []
    for faction in state.factions:
        hostiles = frozen[faction.id]
        for unit in faction.units:
            order = unit.order
            if order == ORDER_MOVE:
                planned.append((unit, UNIT_STATS[unit.kind].speed))
            elif order == ORDER_ATTACK:
                reach = UNIT_STATS[unit.kind].attack_range
                ux, uy = unit.x, unit.y
                engaged = False
                for hx, hy in hostiles:
                    dx = ux - hx
                    if dx < 0:
                        dx = -dx
                    if dx > reach:
                        continue
                    dy = uy - hy
                    if dy < 0:
                        dy = -dy
                    if dy <= reach:
                        engaged = True
                        break
                if not engaged:
                    planned.append((unit, UNIT_STATS[unit.kind].speed))
    for unit, speed in planned:
        tx, ty = unit.target_x, unit.target_y
        for _ in range(speed):
            dx = (tx > unit.x) - (tx < unit.x)
            dy = (ty > unit.y) - (ty < unit.y)
            if dx == 0 and dy == 0:
                break
            unit.x += dx
            unit.y += dy
        if unit.x == tx and unit.y == ty and unit.order == ORDER_MOVE:
            unit.set_idle()


def _resolve_combat(state: GameState) -> None:
    # targets[fid] lists what faction fid may shoot at, ascending id so the
    # first in-range candidate is the lowest-id enemy.
    targets: list[list] = []
    for fid in (0, 1):
        enemy = state.factions[1 - fid]
        merged: list = []
        ui, bi = 0, 0
        units, buildings = enemy.units, enemy.buildings
        while ui < len(units) and bi < len(buildings):
            if units[ui].id < buildings[bi].id:
                u = units[ui]
                merged.append((u.x, u.y, u.kind, UNIT_STATS[u.kind].tags, u))
                ui += 1
            else:
                b = buildings[bi]
                merged.append((b.x, b.y, b.kind, (), b))
                bi += 1
        for u in units[ui:]:
            merged.append((u.x, u.y, u.kind, UNIT_STATS[u.kind].tags, u))
        for b in buildings[bi:]:
            merged.append((b.x, b.y, b.kind, (), b))
        targets.append(merged)

    pending: list[tuple] = []
    turret_damage = BUILDING_STATS[TURRET].damage
    turret_range = BUILDING_STATS[TURRET].attack_range
    for faction in state.factions:
        candidates = targets[faction.id]
        if not candidates:
            continue
        for unit in faction.units:
            stats = UNIT_STATS[unit.kind]
            damage = stats.damage
            if damage <= 0:
                continue
            reach = stats.attack_range
            ux, uy = unit.x, unit.y
            for tx, ty, tkind, ttags, ref in candidates:
                dx = ux - tx
                if dx < 0:
                    dx = -dx
                if dx > reach:
                    continue
                dy = uy - ty
                if dy < 0:
                    dy = -dy
                if dy > reach:
                    continue
                if tkind in UNIT_STATS:
                    pending.append((ref, attack_damage(unit.kind, tkind, ttags)))
                else:
                    pending.append((ref, damage))
                break
        for building in faction.buildings:
            if building.kind != TURRET:
                continue
            bx, by = building.x, building.y
            for tx, ty, tkind, ttags, ref in candidates:
                dx = bx - tx
                if dx < 0:
                    dx = -dx
                if dx > turret_range:
                    continue
                dy = by - ty
                if dy < 0:
                    dy = -dy
                if dy > turret_range:
                    continue
                pending.append((ref, turret_damage))
                break
    # Damage lands simultaneously: units killed this tick still dealt theirs.
    for ref, amount in pending:
        ref.hp -= amount


def _harvest(state: GameState, events: list[dict]) -> None:
    nodes = state.nodes
    for faction in state.factions:
        multiplier = faction.income_multiplier_milli
        for unit in faction.units:
            if unit.order != ORDER_HARVEST:
                continue
            node = nodes[unit.node_index]
            if node.amount_milli <= 0:
                unit.set_idle()
                continue
            unit.harvest_progress += 1
            period = (MINERAL_HARVEST_TICKS if node.kind == "mineral"
                      else GAS_HARVEST_TICKS)
            if unit.harvest_progress < period:
                continue
            unit.harvest_progress = 0
            credit = multiplier if node.amount_milli >= multiplier else node.amount_milli
            node.amount_milli -= credit
            if node.kind == "mineral":
                faction.mined_mineral_milli += credit
                faction.mineral_credit_milli += credit
                whole = faction.mineral_credit_milli // 1000
                if whole:
                    faction.minerals += whole
                    faction.mineral_credit_milli -= whole * 1000
            else:
                faction.mined_gas_milli += credit
                faction.gas_credit_milli += credit
                whole = faction.gas_credit_milli // 1000
                if whole:
                    faction.gas += whole
                    faction.gas_credit_milli -= whole * 1000
            if node.amount_milli <= 0:
                events.append({"type": EVENT_RESOURCE_EXHAUSTED,
                               "node": node.index, "kind": node.kind})


def _remove_dead(state: GameState, events: list[dict]) -> None:
    for faction in state.factions:
        dead_units = [u for u in faction.units if u.hp <= 0]
        if dead_units:
            for u in dead_units:
                faction.supply_used -= UNIT_STATS[u.kind].supply
                events.append({"type": EVENT_UNIT_DIED, "faction": faction.id,
                               "unit": u.id, "kind": u.kind})
            faction.units = [u for u in faction.units if u.hp > 0]
        dead_buildings = [b for b in faction.buildings if b.hp <= 0]
        if dead_buildings:
            for b in dead_buildings:
                events.append({"type": EVENT_BUILDING_DESTROYED,
                               "faction": faction.id, "building": b.id,
                               "kind": b.kind})
            faction.buildings = [b for b in faction.buildings if b.hp > 0]
            _recompute_supply_cap(faction)


def step(state: GameState, actions: ActionSet | None = None,
         enemy_actions: ActionSet | None = None) -> tuple[GameState, TickResult]:
    """Advance one tick in place; the returned state is the same object.

    ``actions`` orders faction 0, ``enemy_actions`` faction 1. Invalid
    commands are dropped with a reason, never raised. Reward is from
    faction 0's perspective and only non-zero on the final tick.
    """
    if state.terminal is not None:
        raise TerminalStateError(f"episode already ended ({state.terminal})")
    result = TickResult()
    events = result.events
    for given in (actions, enemy_actions):
        if given is None:
            continue
        faction = state.factions[given.faction_id]
        _apply_commands(state, faction, given, result.dropped)
    _advance_production(state, events)
    _move_units(state)
    _resolve_combat(state)
    _harvest(state, events)
    _remove_dead(state, events)
    state.tick += 1
    terminal = check_victory(state)
    if terminal is not None:
        state.terminal = terminal
        winner = state.winner
        if winner == 0:
            result.reward = 1
        elif winner == 1:
            result.reward = -1
    if result.dropped:
        log.debug("tick %d dropped %d commands: %s",
                  state.tick, len(result.dropped), result.dropped)
    return state, result
