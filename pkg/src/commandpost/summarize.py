"""Bounded text renderings of game state for the advisor.

Three stages, each a pure function of its inputs: a single-frame
snapshot, a sliding-window digest over sampled frames, and the fully
rendered request that pairs the digest with the player's instruction.
Character budgets are hard limits; when a request would overflow, the
window text gives way and the instruction never does.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .bt.library import library_digest
from .bt.modulators import ModulatorSet, Policy
from .engine.constants import BUILDING_STATS, DEFENSE_RADIUS, UNIT_STATS
from .engine.sim import raid_alarm
from .engine.types import GameState
from .messages import Instruction

FRAME_TEXT_BUDGET = 1200
WINDOW_TEXT_BUDGET = 2000
REQUEST_BUDGET = 6000
# Sliding window defaults: one sample every 10 ticks, last 20 kept.
WINDOW_STRIDE = 10
WINDOW_FRAMES = 20

_TRUNCATION_MARK = "...[window truncated]"

# Fixed key order keeps dict iteration, deltas, and rendered text stable.
_UNIT_KEYS = tuple(sorted(UNIT_STATS))
_BUILDING_KEYS = tuple(sorted(BUILDING_STATS))
_SCALAR_KEYS = ("minerals", "gas", "supply_used", "supply_cap",
                "army_supply", "base_count", "under_attack",
                "enemy_army_supply", "enemy_base_count")
STRUCTURED_KEYS = _UNIT_KEYS + _BUILDING_KEYS + _SCALAR_KEYS

TREND_KEYS = ("army_growing", "losing_units", "expanding")


class SummaryError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class FrameSummary:
    tick: int
    text: str
    structured: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {"tick": self.tick, "text": self.text,
                "structured": dict(self.structured)}


@dataclass(frozen=True, slots=True)
class WindowSummary:
    tick_range: tuple[int, int]
    text: str
    deltas: dict[str, int]
    trends: dict[str, bool]

    def to_dict(self) -> dict[str, Any]:
        return {"tick_range": list(self.tick_range), "text": self.text,
                "deltas": dict(self.deltas), "trends": dict(self.trends)}


@dataclass(frozen=True, slots=True)
class AdvisorRequest:
    """Everything the advisor sees, plus its rendered prompt form."""

    window: WindowSummary
    current_policy: Policy
    last_action_digest: dict[str, int]
    instruction: Instruction
    policy_library_digest: str
    rendered: str

    def to_dict(self) -> dict[str, Any]:
        return {"window": self.window.to_dict(),
                "current_policy": self.current_policy.to_dict(),
                "last_action_digest": dict(self.last_action_digest),
                "instruction": self.instruction.to_dict(),
                "policy_library_digest": self.policy_library_digest,
                "rendered": self.rendered}


def _army_supply(units: Iterable) -> int:
    return sum(UNIT_STATS[u.kind].supply for u in units
               if u.kind != "Worker")


def structured_counts(state: GameState, faction_id: int) -> dict[str, int]:
    """Exact structured channel for one faction; the text mirrors this."""
    own = state.factions[faction_id]
    enemy = state.factions[1 - faction_id]
    counts: dict[str, int] = {}
    for kind in _UNIT_KEYS:
        counts[kind] = sum(1 for u in own.units if u.kind == kind)
    for kind in _BUILDING_KEYS:
        counts[kind] = sum(1 for b in own.buildings if b.kind == kind)
    counts["minerals"] = own.minerals
    counts["gas"] = own.gas
    counts["supply_used"] = own.supply_used
    counts["supply_cap"] = own.supply_cap
    counts["army_supply"] = _army_supply(own.units)
    counts["base_count"] = counts["Base"]
    counts["under_attack"] = int(
        raid_alarm(state, faction_id, DEFENSE_RADIUS) is not None)
    counts["enemy_army_supply"] = _army_supply(enemy.units)
    counts["enemy_base_count"] = sum(
        1 for b in enemy.buildings if b.kind == "Base")
    return counts


def _join_counts(counts: Mapping[str, int], keys: Iterable[str]) -> str:
    parts = [f"{k} {counts[k]}" for k in keys if counts[k]]
    return ", ".join(parts) if parts else "none"


def summarize_frame(state: GameState, faction_id: int) -> FrameSummary:
    """Snapshot one faction's situation at the current tick."""
    c = structured_counts(state, faction_id)
    text = (
        f"[t{state.tick}] minerals {c['minerals']} gas {c['gas']} "
        f"supply {c['supply_used']}/{c['supply_cap']}\n"
        f"units: {_join_counts(c, _UNIT_KEYS)}\n"
        f"buildings: {_join_counts(c, _BUILDING_KEYS)}\n"
        f"army supply {c['army_supply']} | bases {c['base_count']} | "
        f"under attack: {'yes' if c['under_attack'] else 'no'}\n"
        f"enemy: army supply {c['enemy_army_supply']}, "
        f"bases {c['enemy_base_count']}"
    )
    if len(text) > FRAME_TEXT_BUDGET:  # unreachable with sane counts
        text = text[:FRAME_TEXT_BUDGET]
    return FrameSummary(tick=state.tick, text=text, structured=c)


def _trend_flags(deltas: Mapping[str, int]) -> dict[str, bool]:
    unit_change = sum(deltas[k] for k in _UNIT_KEYS)
    return {"army_growing": deltas["army_supply"] > 0,
            "losing_units": unit_change < 0,
            "expanding": deltas["base_count"] > 0}


def summarize_window(frames: list[FrameSummary],
                     stride: int = WINDOW_STRIDE) -> WindowSummary:
    """Digest a run of sampled frames into endpoint deltas and trends."""
    if not frames:
        raise SummaryError("empty-window: need at least one frame")
    all_ticks = [f.tick for f in frames]
    if any(b <= a for a, b in zip(all_ticks, all_ticks[1:])):
        raise SummaryError("frame ticks must be strictly increasing")
    frames = frames[-WINDOW_FRAMES:]
    ticks = all_ticks[-WINDOW_FRAMES:]
    first, last = frames[0].structured, frames[-1].structured
    deltas = {k: last[k] - first[k] for k in STRUCTURED_KEYS}
    trends = _trend_flags(deltas)

    def signed(n: int) -> str:
        return f"{n:+d}"

    army_series = " ".join(str(f.structured["army_supply"]) for f in frames)
    alarm_ticks = [f.tick for f in frames if f.structured["under_attack"]]
    flags = ", ".join(k for k in TREND_KEYS if trends[k]) or "steady"
    text = (
        f"window t{ticks[0]}-t{ticks[-1]} "
        f"({len(frames)} frames, stride {stride})\n"
        f"minerals {first['minerals']}->{last['minerals']} "
        f"({signed(deltas['minerals'])}) "
        f"gas {first['gas']}->{last['gas']} ({signed(deltas['gas'])})\n"
        f"supply {first['supply_used']}/{first['supply_cap']} -> "
        f"{last['supply_used']}/{last['supply_cap']}\n"
        f"army supply {first['army_supply']}->{last['army_supply']} "
        f"({signed(deltas['army_supply'])}), "
        f"bases {first['base_count']}->{last['base_count']}, "
        f"enemy army {first['enemy_army_supply']}->"
        f"{last['enemy_army_supply']}\n"
        f"trend: {flags}\n"
        f"army series: {army_series}\n"
        f"under attack at: "
        f"{' '.join('t' + str(t) for t in alarm_ticks) or 'never'}\n"
        f"latest frame:\n{frames[-1].text}"
    )
    if len(text) > WINDOW_TEXT_BUDGET:
        text = text[:WINDOW_TEXT_BUDGET - len(_TRUNCATION_MARK)]
        text += _TRUNCATION_MARK
    return WindowSummary(tick_range=(ticks[0], ticks[-1]), text=text,
                         deltas=deltas, trends=trends)


def render_modulators(mods: ModulatorSet) -> str:
    weights = ", ".join(f"{kind} {weight:g}"
                        for kind, weight in sorted(mods.weights.items()))
    return (f"weights {weights} | attack at {mods.attack_supply_threshold} "
            f"supply | {mods.worker_target_per_base} workers/base | "
            f"max {mods.max_bases} bases | "
            f"turrets {'on' if mods.build_turrets else 'off'}")


def _render(window_text: str, policy: Policy, digest: Mapping[str, int],
            instruction: Instruction, library_digest: str) -> str:
    actions = ", ".join(f"{k} {v}" for k, v in sorted(digest.items())) \
        or "none"
    return (
        "You advise the commander of faction P0 in a grid RTS.\n"
        "Reply with exactly one JSON object, optionally in a ```json "
        "fence:\n"
        '{"basis": "<policy name>", "deltas": {...}, '
        '"rationale": "<short text>"}\n'
        "Delta fields: composition_weights (map unit kind -> weight), "
        "attack_supply_threshold, worker_target_per_base, max_bases, "
        "build_turrets.\n"
        "Omit deltas you do not want to change.\n"
        "Policies available:\n"
        f"{library_digest}\n"
        f"Current policy: {policy.policy_id} rev {policy.revision}\n"
        f"Modulators: {render_modulators(policy.modulators)}\n"
        f"Commands since last request: {actions}\n"
        "Situation:\n"
        f"{window_text}\n"
        f"Player instruction: {instruction.text}"
    )


def integrate_context(window: WindowSummary, policy: Policy,
                      action_digest: Mapping[str, int],
                      instruction: Instruction,
                      library: Mapping[str, Any]) -> AdvisorRequest:
    """Assemble and render the advisor request, enforcing the budget.

    `library` maps policy names to presets carrying a `description`.
    Overflow is absorbed by trimming the window text; the instruction is
    embedded verbatim no matter what. If the request cannot fit even
    with the window removed, the instruction itself is oversized and
    that is an error.
    """
    if not instruction.text.strip():
        raise SummaryError("instruction must be non-empty")
    digest_text = library_digest(library)
    rendered = _render(window.text, policy, action_digest, instruction,
                       digest_text)
    if len(rendered) > REQUEST_BUDGET:
        overflow = len(rendered) - REQUEST_BUDGET
        keep = len(window.text) - overflow - len(_TRUNCATION_MARK)
        if keep < 0:
            raise SummaryError(
                "budget-impossible: the request exceeds "
                f"{REQUEST_BUDGET} chars even with the window dropped; "
                "the instruction is too long")
        trimmed = window.text[:keep] + _TRUNCATION_MARK
        rendered = _render(trimmed, policy, action_digest, instruction,
                           digest_text)
    return AdvisorRequest(window=window, current_policy=policy,
                          last_action_digest=dict(action_digest),
                          instruction=instruction,
                          policy_library_digest=digest_text,
                          rendered=rendered)
