"""Log verification: re-derive every hashed state from a recorded episode.

A log is replayable from its header config plus the recorded decisions
and manual actions alone; tree and opponent actions are recomputed, so
any tampering with the record stream shows up as a hash mismatch at a
specific tick.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .advisor import AdvisorError, materialize
from .bt import tick as bt_tick
from .bt.library import load_policy_library, make_policy
from .engine import (
    ActionSet,
    Command,
    EngineError,
    GameConfig,
    TerminalStateError,
    merge_manual_actions,
    reset,
    state_hash,
    step,
)
from .messages import PolicyProposal
from .opponent import get_profile, opponent_actions


class ReplayError(Exception):
    pass


@dataclass(slots=True)
class ReplayReport:
    ticks_replayed: int = 0
    hashes_checked: int = 0
    hashes_matched: int = 0
    first_mismatch_tick: int | None = None

    @property
    def ok(self) -> bool:
        return (self.first_mismatch_tick is None
                and self.hashes_checked == self.hashes_matched
                and self.hashes_checked > 0)

    def to_dict(self) -> dict[str, Any]:
        return {"ticks_replayed": self.ticks_replayed,
                "hashes_checked": self.hashes_checked,
                "hashes_matched": self.hashes_matched,
                "first_mismatch_tick": self.first_mismatch_tick,
                "ok": self.ok}

    def summary(self) -> str:
        if self.ok:
            return (f"OK: {self.hashes_matched}/{self.hashes_checked} "
                    "hashes match")
        where = self.first_mismatch_tick
        return (f"MISMATCH: {self.hashes_matched}/{self.hashes_checked} "
                f"hashes match; first divergence at tick {where}")


def replay_records(records: Iterable[dict[str, Any]]) -> ReplayReport:
    """Re-run a recorded episode and compare every recorded hash."""
    records = list(records)
    if not records or records[0].get("type") != "header":
        raise ReplayError("log must start with a header record")
    header = records[0]
    config = GameConfig.from_dict(header["effective_game"])
    session = header["session"]
    profile = get_profile(int(session["opponent_difficulty"]))
    policy = make_policy(str(session["initial_policy"]))
    library = load_policy_library()
    state = reset(config)
    report = ReplayReport()

    def check(tick: int, expected: str) -> bool:
        report.hashes_checked += 1
        if state_hash(state) == expected:
            report.hashes_matched += 1
            return True
        if report.first_mismatch_tick is None:
            report.first_mismatch_tick = tick
        return False

    if "state_hash" in header and not check(0, header["state_hash"]):
        return report

    proposals: dict[int, PolicyProposal] = {}
    for record in records[1:]:
        kind = record.get("type")
        if kind == "proposal":
            proposal = PolicyProposal.from_dict(record["proposal"])
            proposals[proposal.id] = proposal
        elif kind == "decision" and record.get("decision") == "approve":
            pid = int(record["proposal_id"])
            if pid not in proposals:
                raise ReplayError(f"approval of unknown proposal {pid}")
            try:
                policy = materialize(proposals[pid], policy, library)
            except AdvisorError as exc:
                raise ReplayError(
                    f"logged approval cannot be applied: {exc}") from exc
        elif kind == "tick":
            expected_tick = int(record["tick"])
            try:
                bt_actions = bt_tick(policy, state, 0)
                opp = opponent_actions(state, profile, config.rng_seed)
                manual = [Command.from_dict(c)
                          for c in record.get("manual_actions", [])]
                merged = merge_manual_actions(
                    bt_actions, ActionSet(0, manual)) if manual \
                    else bt_actions
                step(state, merged, opp)
            except (EngineError, TerminalStateError, KeyError,
                    ValueError) as exc:
                # A corrupted record stream can produce impossible
                # commands or drive past terminal; count it as a
                # divergence at this tick rather than crashing.
                report.hashes_checked += 1
                if report.first_mismatch_tick is None:
                    report.first_mismatch_tick = expected_tick
                del exc
                return report
            report.ticks_replayed += 1
            if state.tick != expected_tick:
                report.hashes_checked += 1
                if report.first_mismatch_tick is None:
                    report.first_mismatch_tick = expected_tick
                return report
            if "state_hash" in record \
                    and not check(expected_tick, record["state_hash"]):
                return report
        elif kind == "end":
            if "final_hash" in record:
                check(int(record["tick"]), record["final_hash"])
    return report


def replay_file(path: str) -> ReplayReport:
    from .loop import EpisodeLog

    return replay_records(EpisodeLog.read(path).records)
