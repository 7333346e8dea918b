"""Simulation core: resolution order, harvest math, combat, victory.

Combat expectations come from an independent duel model kept in this
file, with its own damage table, so an engine regression cannot hide
behind a shared constant.
"""
from __future__ import annotations

import json

import pytest

from commandpost.engine import (
    ActionSet,
    Command,
    ConfigError,
    GameConfig,
    TERMINAL_DRAW,
    TerminalStateError,
    check_victory,
    default_config,
    merge_manual_actions,
    reset,
    serialize_state,
    state_hash,
    step,
)
from commandpost.engine.serial import _fnv1a64_py, fnv1a64

from conftest import add_building, add_unit, fresh_state, make_config


def acts(faction: int, *commands: Command) -> ActionSet:
    return ActionSet(faction, list(commands))


# --- independent combat oracle -------------------------------------------
# Hand-kept damage table: melee 5 flat, ranged 6 (+4 against fliers),
# air 7 (+3 against melee), worker harmless.

ORACLE_HP = {"Worker": 40, "Melee": 60, "Ranged": 60, "Air": 80}


def oracle_damage(attacker: str, target: str) -> int:
    if attacker == "Worker":
        return 0
    if attacker == "Melee":
        return 5
    if attacker == "Ranged":
        return 10 if target == "Air" else 6
    if attacker == "Air":
        return 10 if target == "Melee" else 7
    raise AssertionError(attacker)


def duel_oracle(side_a: list[str], side_b: list[str]):
    """Everyone in range of everyone; each attacker focuses the lowest id.

    Returns (death_tick_by_slot, survivor_hp_by_slot) where slots are
    ('a', i) / ('b', i) in listed order.
    """
    roster = {}
    for i, kind in enumerate(side_a):
        roster[("a", i)] = [kind, ORACLE_HP[kind]]
    for i, kind in enumerate(side_b):
        roster[("b", i)] = [kind, ORACLE_HP[kind]]
    order = list(roster)  # listed order doubles as id order
    died_at = {}
    for tick in range(1, 200):
        pending = []
        for slot in order:
            if slot in died_at:
                continue
            kind = roster[slot][0]
            enemy_side = "b" if slot[0] == "a" else "a"
            target = next((s for s in order
                           if s[0] == enemy_side and s not in died_at), None)
            if target is None or oracle_damage(kind, roster[target][0]) == 0:
                continue
            pending.append((target, oracle_damage(kind, roster[target][0])))
        if not pending:
            break
        for target, amount in pending:
            roster[target][1] -= amount
        for slot in order:
            if slot not in died_at and roster[slot][1] <= 0:
                died_at[slot] = tick
        if all(s in died_at for s in order if s[0] == "a") or \
           all(s in died_at for s in order if s[0] == "b"):
            break
    survivors = {s: roster[s][1] for s in order if s not in died_at}
    return died_at, survivors


def run_combat(state, kinds_a: list[str], kinds_b: list[str], ticks: int = 200):
    """Stacked placement (everything mutually in range), auto-combat only."""
    slots = {}
    for i, kind in enumerate(kinds_a):
        slots[add_unit(state, faction=0, kind=kind, x=8, y=8).id] = ("a", i)
    for i, kind in enumerate(kinds_b):
        slots[add_unit(state, faction=1, kind=kind, x=8, y=9).id] = ("b", i)
    died_at = {}
    for _ in range(ticks):
        _, result = step(state)
        for event in result.events:
            if event["type"] == "unit_died":
                died_at[slots[event["unit"]]] = state.tick
        if not state.factions[0].units or not state.factions[1].units:
            break
    survivors = {}
    for fid, side in ((0, "a"), (1, "b")):
        for unit in state.factions[fid].units:
            survivors[slots[unit.id]] = unit.hp
    return died_at, survivors


@pytest.mark.parametrize("side_a,side_b", [
    (["Ranged"], ["Air"]),
    (["Air"], ["Melee"]),
    (["Melee"], ["Ranged"]),
    (["Melee", "Melee", "Melee"], ["Ranged", "Ranged"]),
    (["Air", "Air"], ["Ranged", "Melee"]),
    (["Melee", "Ranged", "Air"], ["Melee", "Ranged", "Air"]),
])
def test_combat_matches_duel_oracle(side_a, side_b):
    expected_deaths, expected_survivors = duel_oracle(side_a, side_b)
    state = fresh_state()
    deaths, survivors = run_combat(state, side_a, side_b)
    assert deaths == expected_deaths
    assert survivors == expected_survivors


def test_ranged_beats_air_one_on_one():
    # 10 damage per tick into 80 hp: the flier falls on tick 8 while the
    # shooter keeps 60 - 7*8 = 4 hp.
    deaths, survivors = run_combat(fresh_state(), ["Ranged"], ["Air"])
    assert deaths == {("b", 0): 8}
    assert survivors == {("a", 0): 4}


def test_air_beats_melee_one_on_one():
    deaths, survivors = run_combat(fresh_state(), ["Air"], ["Melee"])
    assert deaths == {("b", 0): 6}
    assert survivors == {("a", 0): 80 - 5 * 6}


def test_melee_pack_beats_equal_mineral_ranged():
    # 3 melee (150 minerals) against 2 ranged (150 minerals + gas).
    deaths, survivors = run_combat(
        fresh_state(), ["Melee", "Melee", "Melee"], ["Ranged", "Ranged"])
    assert set(survivors) == {("a", 1), ("a", 2)}


def test_worker_cannot_fight_back():
    state = fresh_state()
    worker = add_unit(state, faction=0, kind="Worker", x=8, y=8)
    raider = add_unit(state, faction=1, kind="Melee", x=8, y=9)
    for expected_hp in (35, 30, 25, 20, 15, 10, 5):
        step(state)
        assert worker.hp == expected_hp
    _, result = step(state)
    assert any(e["type"] == "unit_died" and e["unit"] == worker.id
               for e in result.events)
    assert raider.hp == 60
    assert state.tick == 8


# --- harvesting -----------------------------------------------------------

def harvest_config(**overrides):
    defaults = dict(
        resource_layout=((5, 5, "mineral", 100),),
        starting_workers=5,
        starting_minerals=100,
    )
    defaults.update(overrides)
    return make_config(**defaults)


def test_five_workers_mine_fifty_minerals_in_eighty_ticks():
    state = reset(harvest_config())
    assign = [Command.assign_worker(u.id, 0) for u in state.factions[0].units]
    step(state, acts(0, *assign))
    for _ in range(79):
        step(state)
    assert state.factions[0].minerals == 150
    assert state.nodes[0].amount_milli == 50_000
    assert state.factions[0].mined_mineral_milli == 50_000


def test_geyser_takes_three_workers_and_pays_on_tens():
    state = reset(harvest_config(resource_layout=((5, 5, "gas", 100),)))
    workers = state.factions[0].units
    assign = [Command.assign_worker(u.id, 0) for u in workers[:4]]
    _, result = step(state, acts(0, *assign))
    assert len(result.dropped) == 1 and "saturated" in result.dropped[0]
    for _ in range(99):
        step(state)
    # 3 assigned workers, 10 cycles of 10 ticks each
    assert state.factions[0].gas == 30


def test_exhausted_node_idles_workers_and_fires_event():
    state = reset(harvest_config(starting_workers=1,
                                 resource_layout=((5, 5, "mineral", 2),)))
    worker = state.factions[0].units[0]
    step(state, acts(0, Command.assign_worker(worker.id, 0)))
    exhausted_tick = None
    for _ in range(30):
        _, result = step(state)
        if any(e["type"] == "resource_exhausted" for e in result.events):
            exhausted_tick = state.tick
    assert exhausted_tick == 16
    assert state.factions[0].minerals == 102
    assert worker.order == "idle"


@pytest.mark.parametrize("multiplier,cycles,expected_gain,expected_credit", [
    (600, 5, 3, 0),      # 5 cycles x 0.6 = 3.0
    (1100, 5, 5, 500),   # 5 cycles x 1.1 = 5.5
])
def test_income_multiplier_banks_exact_milliminerals(multiplier, cycles,
                                                     expected_gain,
                                                     expected_credit):
    state = reset(harvest_config(starting_workers=1,
                                 income_multiplier_milli=(multiplier, 1000)))
    worker = state.factions[0].units[0]
    step(state, acts(0, Command.assign_worker(worker.id, 0)))
    for _ in range(cycles * 8 - 1):
        step(state)
    side = state.factions[0]
    assert side.minerals == 100 + expected_gain
    assert side.mineral_credit_milli == expected_credit
    # what the faction banked is exactly what the node lost
    assert side.mined_mineral_milli == cycles * multiplier
    assert state.nodes[0].amount_milli == 100_000 - cycles * multiplier


def test_mineral_conservation_holds_under_multiplier():
    state = reset(harvest_config(income_multiplier_milli=(1100, 600)))
    for u in state.factions[0].units:
        step(state, acts(0, Command.assign_worker(u.id, 0)))
    for _ in range(200):
        step(state)
    total_initial = 100 * 1000
    mined = sum(f.mined_mineral_milli for f in state.factions)
    assert mined + state.nodes[0].amount_milli == total_initial
    for side in state.factions:
        assert (side.minerals * 1000 + side.spent_minerals * 1000
                + side.mineral_credit_milli
                == side.starting_minerals * 1000 + side.mined_mineral_milli)


# --- production and supply ------------------------------------------------

def test_worker_training_takes_fifteen_ticks():
    state = fresh_state()
    base = state.factions[0].buildings[0]
    step(state, acts(0, Command.build_unit(base.id, "Worker")))
    side = state.factions[0]
    assert side.minerals == 0 and side.spent_minerals == 50
    for _ in range(13):
        _, result = step(state)
        assert not result.events
    _, result = step(state)
    assert state.tick == 15
    assert [e["type"] for e in result.events] == ["production_complete"]
    assert len(side.units) == 1 and side.units[0].kind == "Worker"
    assert side.supply_used == 1


def test_only_matching_producer_accepts_training():
    state = fresh_state(starting_minerals=1000)
    rax = add_building(state, faction=0, kind="Barracks", x=4, y=4)
    _, result = step(state, acts(0,
                                 Command.build_unit(rax.id, "Worker"),
                                 Command.build_unit(rax.id, "Air"),
                                 Command.build_unit(rax.id, "Melee")))
    assert len(result.dropped) == 2
    assert rax.queue == [["Melee", 14]]


def test_queue_caps_at_five():
    state = fresh_state(starting_minerals=1000)
    base = state.factions[0].buildings[0]
    orders = [Command.build_unit(base.id, "Worker") for _ in range(6)]
    _, result = step(state, acts(0, *orders))
    assert len(base.queue) == 5
    assert len(result.dropped) == 1 and "queue full" in result.dropped[0]
    assert state.factions[0].minerals == 1000 - 250


def test_supply_block_is_enforced_at_order_time():
    state = fresh_state(starting_workers=9, starting_minerals=500)
    base = state.factions[0].buildings[0]
    _, result = step(state, acts(0,
                                 Command.build_unit(base.id, "Worker"),
                                 Command.build_unit(base.id, "Worker")))
    assert len(base.queue) == 1
    assert len(result.dropped) == 1 and "supply blocked" in result.dropped[0]


def test_depot_loss_shrinks_cap_but_not_used():
    state = fresh_state(starting_workers=6)
    depot = add_building(state, faction=0, kind="SupplyDepot", x=4, y=4)
    state.factions[0].supply_cap = 18
    depot.hp = 0
    step(state)
    assert state.factions[0].supply_cap == 10
    assert state.factions[0].supply_used == 6


# --- movement -------------------------------------------------------------

def test_move_steps_diagonally_then_straight():
    state = fresh_state()
    unit = add_unit(state, faction=0, kind="Melee", x=0, y=0)
    step(state, acts(0, Command.move(unit.id, 5, 3)))
    path = [(unit.x, unit.y)]
    for _ in range(4):
        step(state)
        path.append((unit.x, unit.y))
    assert path == [(1, 1), (2, 2), (3, 3), (4, 3), (5, 3)]
    assert unit.order == "idle"


def test_air_moves_two_cells_per_tick():
    state = fresh_state()
    unit = add_unit(state, faction=0, kind="Air", x=0, y=0)
    step(state, acts(0, Command.move(unit.id, 6, 6)))
    assert (unit.x, unit.y) == (2, 2)
    step(state)
    step(state)
    assert (unit.x, unit.y) == (6, 6)


def test_attack_mover_halts_when_target_in_reach():
    state = fresh_state()
    shooter = add_unit(state, faction=0, kind="Ranged", x=0, y=8)
    victim = add_unit(state, faction=1, kind="Melee", x=6, y=8, hp=600)
    step(state, acts(0, Command.attack(shooter.id, 15, 8)))
    positions = [(shooter.x, shooter.y)]
    for _ in range(3):
        step(state)
        positions.append((shooter.x, shooter.y))
    # closes to range 3 and stands there shooting
    assert positions == [(1, 8), (2, 8), (3, 8), (3, 8)]
    assert victim.hp < 600


def test_workers_cannot_take_attack_orders():
    state = fresh_state()
    worker = add_unit(state, faction=0, kind="Worker", x=2, y=2)
    _, result = step(state, acts(0, Command.attack(worker.id, 5, 5)))
    assert len(result.dropped) == 1 and "cannot attack" in result.dropped[0]
    assert worker.order == "idle"


# --- structures -----------------------------------------------------------

def test_structure_placement_rejects_occupied_and_out_of_bounds():
    state = fresh_state(starting_minerals=1000)
    base = state.factions[0].buildings[0]
    _, result = step(state, acts(0,
                                 Command.build_structure("Turret", base.x, base.y),
                                 Command.build_structure("Turret", 99, 5),
                                 Command.build_structure("Turret", 5, 5)))
    assert len(result.dropped) == 2
    kinds = sorted(b.kind for b in state.factions[0].buildings)
    assert kinds == ["Base", "Turret"]


def test_new_depot_raises_cap_immediately():
    state = fresh_state(starting_minerals=200)
    step(state, acts(0, Command.build_structure("SupplyDepot", 5, 5)))
    assert state.factions[0].supply_cap == 18


# --- victory and terminal handling ---------------------------------------

def test_razing_last_building_wins_with_terminal_reward():
    state = fresh_state()
    add_building(state, faction=1, kind="Turret", x=10, y=10)
    state.factions[1].buildings.pop(0)  # leave the turret as the last building
    for _ in range(6):
        add_unit(state, faction=0, kind="Ranged", x=10, y=13)
    reward_total = 0
    for _ in range(10):
        _, result = step(state)
        reward_total += result.reward
        if state.is_terminal:
            break
    assert state.tick == 6
    assert state.terminal == "winner:0"
    assert state.winner == 0
    assert reward_total == 1
    assert state.factions[0].units[0].hp == 60 - 8 * 6


def test_tick_limit_forces_draw_and_absorbs():
    state = fresh_state(tick_limit=5)
    rewards = []
    for _ in range(5):
        _, result = step(state)
        rewards.append(result.reward)
    assert state.terminal == TERMINAL_DRAW
    assert rewards == [0, 0, 0, 0, 0]
    with pytest.raises(TerminalStateError):
        step(state)


def test_mutual_destruction_same_tick_is_a_draw():
    state = fresh_state()
    for side in state.factions:
        side.buildings.clear()
    add_building(state, faction=0, kind="Turret", x=8, y=8)
    add_building(state, faction=1, kind="Turret", x=8, y=10)
    for _ in range(25):
        step(state)
        if state.is_terminal:
            break
    assert state.terminal == TERMINAL_DRAW


def test_check_victory_reads_without_mutating():
    state = fresh_state()
    assert check_victory(state) is None
    state.factions[1].buildings.clear()
    assert check_victory(state) == "winner:0"
    assert state.terminal is None


# --- manual merge ---------------------------------------------------------

def test_manual_command_overrides_same_unit():
    scripted = ActionSet(0, [Command.attack(7, 9, 9), Command.move(8, 1, 1)])
    manual = ActionSet(0, [Command.move(7, 3, 3)])
    merged = merge_manual_actions(scripted, manual)
    as_dicts = [c.to_dict() for c in merged.commands]
    assert {"type": "move", "unit": 7, "cell": [3, 3]} in as_dicts
    assert {"type": "attack", "unit": 7, "cell": [9, 9]} not in as_dicts
    assert {"type": "move", "unit": 8, "cell": [1, 1]} in as_dicts


def test_disjoint_manual_commands_union():
    scripted = ActionSet(0, [Command.move(1, 2, 2)])
    manual = ActionSet(0, [Command.stop(2)])
    merged = merge_manual_actions(scripted, manual)
    assert len(merged.commands) == 2


def test_empty_manual_leaves_script_untouched():
    scripted = ActionSet(0, [Command.move(1, 2, 2)])
    merged = merge_manual_actions(scripted, ActionSet(0))
    assert [c.to_dict() for c in merged.commands] == [c.to_dict() for c in scripted.commands]
    assert merged.commands is not scripted.commands


def test_merge_rejects_mismatched_factions():
    with pytest.raises(ValueError):
        merge_manual_actions(ActionSet(0), ActionSet(1))


# --- determinism, serialization, ids -------------------------------------

def scripted_skirmish(seed: int, ticks: int = 120) -> list[str]:
    state = reset(default_config(rng_seed=seed))
    hashes = [state_hash(state)]
    melee = []
    for i in range(4):
        melee.append(add_unit(state, faction=0, kind="Melee", x=6 + i, y=6))
        add_unit(state, faction=1, kind="Melee", x=20, y=20 + i)
    for t in range(ticks):
        if state.is_terminal:
            break
        commands = []
        if t == 10:
            commands = [Command.attack(u.id, 27, 27) for u in melee]
        step(state, acts(0, *commands))
        hashes.append(state_hash(state))
    return hashes


def test_identical_seed_and_script_replay_bit_exact():
    assert scripted_skirmish(seed=1) == scripted_skirmish(seed=1)


def test_different_seeds_diverge_from_reset():
    a = state_hash(reset(default_config(rng_seed=1)))
    b = state_hash(reset(default_config(rng_seed=2)))
    assert a != b


def test_serialized_state_is_key_ordered_json():
    state = reset(default_config(rng_seed=5))
    text = serialize_state(state)
    parsed = json.loads(text)
    assert json.dumps(parsed, sort_keys=True, separators=(",", ":")) == text
    digest = state_hash(state)
    assert len(digest) == 16 and int(digest, 16) >= 0


def test_pure_and_accelerated_hash_agree():
    payloads = [b"", b"x", b"commandpost", bytes(range(256)) * 3]
    for payload in payloads:
        assert fnv1a64(payload) == _fnv1a64_py(payload)


def test_entity_ids_never_reused_after_deaths():
    state = fresh_state(starting_minerals=500)
    seen = {b.id for f in state.factions for b in f.buildings}
    add_unit(state, faction=0, kind="Melee", x=8, y=8)
    add_unit(state, faction=1, kind="Air", x=8, y=9)
    base = state.factions[0].buildings[0]
    for _ in range(40):
        commands = []
        if not base.queue and state.factions[0].minerals >= 50:
            commands.append(Command.build_unit(base.id, "Worker"))
        step(state, acts(0, *commands))
        current = {e.id for f in state.factions for e in (*f.units, *f.buildings)}
        fresh = current - seen
        assert all(i >= max(seen, default=0) for i in fresh)
        seen |= current


def test_tick_counter_is_strictly_monotone():
    state = fresh_state()
    ticks = []
    for _ in range(10):
        step(state)
        ticks.append(state.tick)
    assert ticks == list(range(1, 11))


# --- config validation ----------------------------------------------------

@pytest.mark.parametrize("overrides", [
    dict(width=4),
    dict(start_locations=((1, 1),)),
    dict(start_locations=((1, 1), (99, 99))),
    dict(resource_layout=((5, 5, "mineral", 0),)),
    dict(resource_layout=((5, 5, "crystal", 10),)),
    dict(rng_seed=2**64),
    dict(tick_limit=0),
])
def test_config_invariants_fail_fast(overrides):
    with pytest.raises(ConfigError):
        make_config(**overrides)


def test_default_config_round_trips_through_dict():
    cfg = default_config(rng_seed=9)
    assert GameConfig.from_dict(cfg.to_dict()) == cfg
