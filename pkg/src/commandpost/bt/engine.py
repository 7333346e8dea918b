"""Tick evaluation: turn a policy plus a state into an ActionSet.

Evaluation is pure. Emitters read the state, append commands to the tick
context, and report success; conditions gate branches. Resource spending
is tracked virtually inside the context so one tick never emits orders
it could not afford together, even though the sim would just drop them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..engine.constants import (
    BASE,
    BUILDING_STATS,
    COMBAT_KINDS,
    DEFENSE_RADIUS,
    GAS_KIND,
    GEYSER_WORKER_LIMIT,
    MINERAL_KIND,
    PRODUCER_FOR,
    SUPPLY_CAP_MAX,
    TURRET,
    TURRETS_PER_BASE_LIMIT,
    UNIT_STATS,
    WORKER,
)
from ..engine.sim import raid_alarm
from ..engine.types import (
    ActionSet,
    Command,
    FactionState,
    GameState,
    ORDER_ATTACK,
    ORDER_HARVEST,
    ORDER_IDLE,
    ORDER_MOVE,
    chebyshev,
)
from .modulators import ModulatorSet, Policy
from .tree import ACTION, CONDITION, SELECTOR, TreeNode, load_default_tree, validate_tree

# Expansion claims and worker assignment both use this reach around a Base.
BASE_WORK_RADIUS = 10
ENGAGE_RADIUS = 10
RALLY_RADIUS = 4
EXPAND_MINERAL_FLOOR = 400
CAPACITY_MINERAL_FLOOR = 450
SUPPLY_HEADROOM_FLOOR = 4
MIN_MINERAL_CREW_BEFORE_GAS = 6


@dataclass
class TickContext:
    state: GameState
    faction: FactionState
    enemy: FactionState
    mods: ModulatorSet
    defense_radius: int
    commands: list[Command] = field(default_factory=list)
    minerals: int = 0
    gas: int = 0
    planned_supply: int = 0
    structures_placed: int = 0
    _alarm_cached: bool = False
    _alarm = None

    def alarm_base(self):
        if not self._alarm_cached:
            self._alarm = raid_alarm(self.state, self.faction.id, self.defense_radius)
            self._alarm_cached = True
        return self._alarm

    def afford(self, mineral_cost: int, gas_cost: int) -> bool:
        return self.minerals >= mineral_cost and self.gas >= gas_cost

    def spend(self, mineral_cost: int, gas_cost: int) -> None:
        self.minerals -= mineral_cost
        self.gas -= gas_cost


def _bases(faction: FactionState) -> list:
    return [b for b in faction.buildings if b.kind == BASE]


def _queued_counts(faction: FactionState) -> dict[str, int]:
    counts: dict[str, int] = {}
    for building in faction.buildings:
        for kind, _ in building.queue:
            counts[kind] = counts.get(kind, 0) + 1
    return counts


def _free_cell_near(ctx: TickContext, ax: int, ay: int,
                    max_ring: int = 5) -> tuple[int, int] | None:
    """First unoccupied in-bounds cell ringing outward from the anchor."""
    state = ctx.state
    occupied = {(b.x, b.y) for f in state.factions for b in f.buildings}
    for cmd in ctx.commands:
        if cmd.kind == "build_structure":
            occupied.add((cmd.x, cmd.y))
    for ring in range(1, max_ring + 1):
        for dy in range(-ring, ring + 1):
            for dx in range(-ring, ring + 1):
                if max(abs(dx), abs(dy)) != ring:
                    continue
                x, y = ax + dx, ay + dy
                if 0 <= x < state.width and 0 <= y < state.height \
                        and (x, y) not in occupied:
                    return x, y
    return None


# --- conditions -----------------------------------------------------------

def cond_enemy_near_base(ctx: TickContext) -> bool:
    return ctx.alarm_base() is not None


# --- raid response --------------------------------------------------------

def act_recall_army(ctx: TickContext) -> bool:
    alarm = ctx.alarm_base()
    if alarm is None:
        return True
    ax, ay = alarm.x, alarm.y
    for unit in ctx.faction.units:
        if unit.kind == WORKER:
            continue
        if unit.order == ORDER_ATTACK and unit.target_x == ax and unit.target_y == ay:
            continue
        ctx.commands.append(Command.attack(unit.id, ax, ay))
    return True


def act_emergency_turret(ctx: TickContext) -> bool:
    if not ctx.mods.build_turrets:
        return True
    alarm = ctx.alarm_base()
    if alarm is None:
        return True
    cost = BUILDING_STATS[TURRET]
    if not ctx.afford(cost.mineral_cost, cost.gas_cost):
        return True
    nearby = sum(1 for b in ctx.faction.buildings
                 if b.kind == TURRET
                 and chebyshev(b.x, b.y, alarm.x, alarm.y) <= ctx.defense_radius)
    if nearby >= TURRETS_PER_BASE_LIMIT:
        return True
    cell = _free_cell_near(ctx, alarm.x, alarm.y)
    if cell is None:
        return True
    ctx.commands.append(Command.build_structure(TURRET, *cell))
    ctx.spend(cost.mineral_cost, cost.gas_cost)
    ctx.structures_placed += 1
    return True


# --- macro ----------------------------------------------------------------

def _queued_supply_total(faction: FactionState) -> int:
    total = 0
    for building in faction.buildings:
        for kind, _ in building.queue:
            total += UNIT_STATS[kind].supply
    return total


def act_keep_supply(ctx: TickContext) -> bool:
    faction = ctx.faction
    headroom = (faction.supply_cap - faction.supply_used
                - _queued_supply_total(faction) - ctx.planned_supply)
    if headroom >= SUPPLY_HEADROOM_FLOOR or faction.supply_cap >= SUPPLY_CAP_MAX:
        return True
    cost = BUILDING_STATS["SupplyDepot"]
    if not ctx.afford(cost.mineral_cost, cost.gas_cost):
        return True
    bases = _bases(faction)
    anchor = bases[0] if bases else (faction.buildings[0] if faction.buildings else None)
    if anchor is None:
        return True
    cell = _free_cell_near(ctx, anchor.x, anchor.y)
    if cell is None:
        return True
    ctx.commands.append(Command.build_structure("SupplyDepot", *cell))
    ctx.spend(cost.mineral_cost, cost.gas_cost)
    ctx.structures_placed += 1
    return True


def act_train_workers(ctx: TickContext) -> bool:
    faction = ctx.faction
    bases = _bases(faction)
    if not bases:
        return True
    target = ctx.mods.worker_target_per_base * len(bases)
    queued = _queued_counts(faction)
    count = sum(1 for u in faction.units if u.kind == WORKER) \
        + queued.get(WORKER, 0)
    stats = UNIT_STATS[WORKER]
    queued_supply = _queued_supply_total(faction)
    for base in bases:
        if count >= target:
            break
        if base.queue or not ctx.afford(stats.mineral_cost, stats.gas_cost):
            continue
        if (faction.supply_used + queued_supply + ctx.planned_supply
                + stats.supply > faction.supply_cap):
            break
        ctx.commands.append(Command.build_unit(base.id, WORKER))
        ctx.spend(stats.mineral_cost, stats.gas_cost)
        ctx.planned_supply += stats.supply
        count += 1
    return True


def _wants_gas(mods: ModulatorSet) -> bool:
    for kind, weight in mods.composition_weights:
        if weight > 0 and UNIT_STATS[kind].gas_cost > 0:
            return True
    return False


def act_assign_workers(ctx: TickContext) -> bool:
    state, faction = ctx.state, ctx.faction
    bases = _bases(faction)
    if not bases:
        return True
    near_nodes = []
    for node in state.nodes:
        if node.amount_milli <= 0:
            continue
        for base in bases:
            if chebyshev(node.x, node.y, base.x, base.y) <= BASE_WORK_RADIUS:
                near_nodes.append(node)
                break
    if not near_nodes:
        return True
    assigned: dict[int, int] = {}
    mineral_crew = 0
    for unit in faction.units:
        if unit.order == ORDER_HARVEST:
            assigned[unit.node_index] = assigned.get(unit.node_index, 0) + 1
            if state.nodes[unit.node_index].kind == MINERAL_KIND:
                mineral_crew += 1
    gas_wanted = _wants_gas(ctx.mods)
    minerals_near = [n for n in near_nodes if n.kind == MINERAL_KIND]
    gas_near = [n for n in near_nodes if n.kind == GAS_KIND]

    def pick_node():
        if gas_wanted:
            for node in gas_near:
                if assigned.get(node.index, 0) < GEYSER_WORKER_LIMIT \
                        and mineral_crew >= MIN_MINERAL_CREW_BEFORE_GAS:
                    return node
        best = None
        for node in minerals_near:
            load = assigned.get(node.index, 0)
            if best is None or load < best[0]:
                best = (load, node)
        return best[1] if best else (gas_near[0] if gas_near else None)

    for unit in faction.units:
        if unit.kind != WORKER or unit.order != ORDER_IDLE:
            continue
        node = pick_node()
        if node is None:
            break
        if node.kind == GAS_KIND and assigned.get(node.index, 0) >= GEYSER_WORKER_LIMIT:
            continue
        ctx.commands.append(Command.assign_worker(unit.id, node.index))
        assigned[node.index] = assigned.get(node.index, 0) + 1
        if node.kind == MINERAL_KIND:
            mineral_crew += 1

    # Shift one miner per tick onto wanted gas once the mineral line is manned.
    if gas_wanted and mineral_crew > MIN_MINERAL_CREW_BEFORE_GAS:
        for node in gas_near:
            if assigned.get(node.index, 0) >= GEYSER_WORKER_LIMIT:
                continue
            for unit in faction.units:
                if unit.order == ORDER_HARVEST \
                        and state.nodes[unit.node_index].kind == MINERAL_KIND:
                    ctx.commands.append(Command.assign_worker(unit.id, node.index))
                    break
            break
    return True


def act_expand_base(ctx: TickContext) -> bool:
    faction = ctx.faction
    bases = _bases(faction)
    if len(bases) >= ctx.mods.max_bases or not bases:
        return True
    cost = BUILDING_STATS[BASE]
    if faction.minerals <= EXPAND_MINERAL_FLOOR \
            or not ctx.afford(cost.mineral_cost, cost.gas_cost):
        return True
    enemy_bases = _bases(ctx.enemy)
    for node in ctx.state.nodes:
        if node.kind != MINERAL_KIND or node.amount_milli <= 0:
            continue
        if any(chebyshev(node.x, node.y, b.x, b.y) <= BASE_WORK_RADIUS
               for b in bases):
            continue
        if any(chebyshev(node.x, node.y, b.x, b.y) <= BASE_WORK_RADIUS
               for b in enemy_bases):
            continue
        cell = _free_cell_near(ctx, node.x, node.y, max_ring=3)
        if cell is None:
            continue
        ctx.commands.append(Command.build_structure(BASE, *cell))
        ctx.spend(cost.mineral_cost, cost.gas_cost)
        ctx.structures_placed += 1
        return True
    return True


def _army_shares(mods: ModulatorSet) -> dict[str, float]:
    weights = {k: w for k, w in mods.composition_weights if w > 0}
    total = sum(weights.values())
    return {k: w / total for k, w in weights.items()}


def act_train_army(ctx: TickContext) -> bool:
    faction = ctx.faction
    shares = _army_shares(ctx.mods)
    if not shares:
        return True
    queued = _queued_counts(faction)
    counts = {k: queued.get(k, 0) for k in shares}
    for unit in faction.units:
        if unit.kind in counts:
            counts[unit.kind] += 1
    producer_count = {k: 0 for k in shares}
    idle_producers: dict[str, list] = {k: [] for k in shares}
    producer_kind_of = {PRODUCER_FOR[k]: k for k in shares}
    for building in faction.buildings:
        kind = producer_kind_of.get(building.kind)
        if kind is None:
            continue
        producer_count[kind] += 1
        if not building.queue:
            idle_producers[kind].append(building)

    bases = _bases(faction)

    def deficit_order(current: dict[str, int]) -> list[str]:
        total = sum(current.values())
        def deficit(kind: str) -> float:
            have = current[kind] / total if total else 0.0
            return shares[kind] - have
        return sorted(shares, key=lambda k: (-deficit(k), k))

    # One structure per tick: either the first missing producer or extra
    # capacity once the bank can carry it.
    if ctx.structures_placed == 0:
        for kind in deficit_order(counts):
            desired = max(1, round(shares[kind] * (len(bases) + 2)))
            if producer_count[kind] >= desired:
                continue
            if producer_count[kind] > 0 and faction.minerals < CAPACITY_MINERAL_FLOOR:
                continue
            stats = BUILDING_STATS[PRODUCER_FOR[kind]]
            if not ctx.afford(stats.mineral_cost, stats.gas_cost):
                continue
            anchor = bases[0] if bases else faction.buildings[0]
            cell = _free_cell_near(ctx, anchor.x, anchor.y)
            if cell is None:
                break
            ctx.commands.append(Command.build_structure(PRODUCER_FOR[kind], *cell))
            ctx.spend(stats.mineral_cost, stats.gas_cost)
            ctx.structures_placed += 1
            break

    queued_supply = _queued_supply_total(faction)
    for _ in range(sum(len(v) for v in idle_producers.values())):
        emitted = False
        for kind in deficit_order(counts):
            if not idle_producers[kind]:
                continue
            stats = UNIT_STATS[kind]
            if not ctx.afford(stats.mineral_cost, stats.gas_cost):
                continue
            if (faction.supply_used + queued_supply + ctx.planned_supply
                    + stats.supply > faction.supply_cap):
                continue
            building = idle_producers[kind].pop(0)
            ctx.commands.append(Command.build_unit(building.id, kind))
            ctx.spend(stats.mineral_cost, stats.gas_cost)
            ctx.planned_supply += stats.supply
            counts[kind] += 1
            emitted = True
            break
        if not emitted:
            break
    return True


# --- army posture ---------------------------------------------------------

def act_army_control(ctx: TickContext) -> bool:
    faction, enemy = ctx.faction, ctx.enemy
    army = [u for u in faction.units if u.kind != WORKER]
    if not army:
        return True
    army_supply = sum(UNIT_STATS[u.kind].supply for u in army)
    committed = False
    if enemy.buildings:
        for unit in army:
            for b in enemy.buildings:
                if chebyshev(unit.x, unit.y, b.x, b.y) <= ENGAGE_RADIUS:
                    committed = True
                    break
            if committed:
                break
    if army_supply >= ctx.mods.attack_supply_threshold or committed:
        if enemy.buildings:
            target = enemy.buildings[0]
        elif enemy.units:
            target = enemy.units[0]
        else:
            return True
        tx, ty = target.x, target.y
        for unit in army:
            if unit.order == ORDER_ATTACK and unit.target_x == tx and unit.target_y == ty:
                continue
            ctx.commands.append(Command.attack(unit.id, tx, ty))
    else:
        bases = _bases(faction)
        if not bases:
            return True
        rx, ry = bases[0].x, bases[0].y
        for unit in army:
            if chebyshev(unit.x, unit.y, rx, ry) <= RALLY_RADIUS:
                continue
            if unit.order == ORDER_MOVE and unit.target_x == rx and unit.target_y == ry:
                continue
            ctx.commands.append(Command.move(unit.id, rx, ry))
    return True


def act_no_op(ctx: TickContext) -> bool:
    return True


CONDITIONS = {
    "enemy_near_base": cond_enemy_near_base,
}

ACTIONS = {
    "recall_army": act_recall_army,
    "emergency_turret": act_emergency_turret,
    "keep_supply": act_keep_supply,
    "train_workers": act_train_workers,
    "assign_workers": act_assign_workers,
    "expand_base": act_expand_base,
    "train_army": act_train_army,
    "army_control": act_army_control,
    "no_op": act_no_op,
}

_default_tree: TreeNode | None = None


def default_tree() -> TreeNode:
    global _default_tree
    if _default_tree is None:
        tree = load_default_tree()
        validate_tree(tree, conditions=set(CONDITIONS), actions=set(ACTIONS))
        _default_tree = tree
    return _default_tree


def _evaluate(node: TreeNode, ctx: TickContext) -> bool:
    kind = node.kind
    if kind == CONDITION:
        return CONDITIONS[node.ref](ctx)
    if kind == ACTION:
        return ACTIONS[node.ref](ctx)
    if kind == SELECTOR:
        for child in node.children:
            if _evaluate(child, ctx):
                return True
        return False
    for child in node.children:
        if not _evaluate(child, ctx):
            return False
    return True


def tick(policy: Policy, state: GameState, faction_id: int = 0, *,
         defense_radius: int = DEFENSE_RADIUS,
         tree: TreeNode | None = None) -> ActionSet:
    """Commands the tree wants this tick. Pure: the state is only read."""
    ctx = TickContext(
        state=state,
        faction=state.factions[faction_id],
        enemy=state.factions[1 - faction_id],
        mods=policy.modulators,
        defense_radius=defense_radius,
    )
    ctx.minerals = ctx.faction.minerals
    ctx.gas = ctx.faction.gas
    _evaluate(tree if tree is not None else default_tree(), ctx)
    return ActionSet(faction_id, ctx.commands)
