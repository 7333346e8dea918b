"""Episode orchestration: tick stepping, instruction intake, approvals.

The core invariant lives here: the behavior tree acts every tick under
the active policy, and that policy changes only through an approved
proposal, taking effect on the tick after the approval. Advisor
failures are logged events, never fatal.

Two drivers share one episode core. `run_episode` is the synchronous
lockstep driver used by CI and batch evaluation; `CommandLoop` paces a
wall-clock thread for live sessions and keeps advisor calls off the
stepping thread.
"""
from __future__ import annotations

import json
import queue
import threading
import time
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

from .advisor import AdvisorConfig, AdvisorError, make_advisor, materialize
from .bt import tick as bt_tick
from .bt.library import load_policy_library, make_policy
from .bt.modulators import Policy
from .engine import (
    ActionSet,
    Command,
    GameConfig,
    canonical_json,
    default_config,
    merge_manual_actions,
    reset,
    state_hash,
    step,
)
from .messages import Instruction, PolicyProposal
from .opponent import get_profile, opponent_actions
from .summarize import (
    WINDOW_FRAMES,
    WINDOW_STRIDE,
    integrate_context,
    summarize_frame,
    summarize_window,
)

MODES = ("lockstep", "realtime")
DECISIONS = ("approve", "reject")

PHASE_AWAITING = "awaiting_initial_instruction"
PHASE_RUNNING = "running"
PHASE_ENDED = "ended"


class LoopError(Exception):
    pass


class SessionEndedError(LoopError):
    pass


class UnknownProposalError(LoopError):
    pass


class StaleProposalError(LoopError):
    pass


@dataclass(frozen=True, slots=True)
class SessionConfig:
    game: GameConfig
    advisor: AdvisorConfig = field(default_factory=AdvisorConfig)
    opponent_difficulty: int = 1
    mode: str = "realtime"
    tick_rate: float = 10.0
    auto_approve: bool = False
    initial_policy: str = "balanced_macro"
    hash_every: int = 1  # 0 = hash only the final state

    def __post_init__(self) -> None:
        if not 1 <= self.opponent_difficulty <= 6:
            raise ValueError("opponent_difficulty must be within [1, 6]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.tick_rate <= 0:
            raise ValueError("tick_rate must be positive")
        if self.hash_every < 0:
            raise ValueError("hash_every must be >= 0")
        if self.initial_policy not in load_policy_library():
            raise ValueError(
                f"initial_policy {self.initial_policy!r} not in library")

    def to_dict(self) -> dict[str, Any]:
        return {"game": self.game.to_dict(),
                "advisor": self.advisor.to_dict(),
                "opponent_difficulty": self.opponent_difficulty,
                "mode": self.mode, "tick_rate": self.tick_rate,
                "auto_approve": self.auto_approve,
                "initial_policy": self.initial_policy,
                "hash_every": self.hash_every}

    @staticmethod
    def _game_from(payload: Mapping[str, Any] | None) -> GameConfig:
        if not payload:
            return default_config(rng_seed=0)
        try:
            return GameConfig.from_dict(dict(payload))
        except KeyError:
            # Partial dicts are overrides onto the default arena; replay
            # headers always carry the full config and take the strict
            # path above.
            base = default_config(rng_seed=0).to_dict()
            unknown = sorted(set(payload) - set(base))
            if unknown:
                raise ValueError(f"unknown game config keys: {unknown}") \
                    from None
            base.update(payload)
            return GameConfig.from_dict(base)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "SessionConfig":
        advisor_cfg = payload.get("advisor")
        return cls(
            game=cls._game_from(payload.get("game")),
            advisor=AdvisorConfig.from_dict(advisor_cfg)
            if advisor_cfg else AdvisorConfig(),
            opponent_difficulty=int(payload.get("opponent_difficulty", 1)),
            mode=str(payload.get("mode", "realtime")),
            tick_rate=float(payload.get("tick_rate", 10.0)),
            auto_approve=bool(payload.get("auto_approve", False)),
            initial_policy=str(payload.get("initial_policy",
                                           "balanced_macro")),
            hash_every=int(payload.get("hash_every", 1)))


class EpisodeLog:
    """Append-only record list with canonical JSONL persistence."""

    def __init__(self) -> None:
        self.records: list[dict[str, Any]] = []

    def append(self, record: dict[str, Any]) -> None:
        self.records.append(record)

    def to_jsonl(self) -> str:
        return "".join(canonical_json(r) + "\n" for r in self.records)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_jsonl())

    def hashes(self) -> list[tuple[int, str]]:
        return [(r["tick"], r["state_hash"]) for r in self.records
                if r.get("type") == "tick" and "state_hash" in r]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @classmethod
    def read(cls, path: str) -> "EpisodeLog":
        log = cls()
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    log.append(json.loads(line))
        return log


@dataclass(frozen=True, slots=True)
class EpisodeResult:
    outcome: str  # win | loss | draw (faction 0 perspective)
    ticks: int
    policy_revision_count: int
    instruction_count: int
    proposals_accepted: int
    proposals_rejected: int
    final_hash: str

    def to_dict(self) -> dict[str, Any]:
        return {"outcome": self.outcome, "ticks": self.ticks,
                "policy_revision_count": self.policy_revision_count,
                "instruction_count": self.instruction_count,
                "proposals_accepted": self.proposals_accepted,
                "proposals_rejected": self.proposals_rejected,
                "final_hash": self.final_hash}


def _outcome(winner: int | None) -> str:
    if winner == 0:
        return "win"
    if winner == 1:
        return "loss"
    return "draw"


class EpisodeCore:
    """Single-episode state machine; not thread-safe by itself.

    Owns the game state, the active policy, frame sampling, the pending
    proposal slot, and the log. Drivers decide when ticks advance and
    where advisor calls run.
    """

    def __init__(self, session: SessionConfig,
                 listener: Callable[[str, dict[str, Any]], None]
                 | None = None) -> None:
        self.session = session
        self.profile = get_profile(session.opponent_difficulty)
        self.config = replace(
            session.game,
            income_multiplier_milli=(
                session.game.income_multiplier_milli[0],
                self.profile.income_multiplier_milli))
        self.state = reset(self.config)
        self.policy = make_policy(session.initial_policy)
        self.library = load_policy_library()
        self.log = EpisodeLog()
        self.listener = listener
        self.frames: deque = deque(maxlen=WINDOW_FRAMES)
        self.pending: PolicyProposal | None = None
        self.stale_ids: set[int] = set()
        self.decided_ids: set[int] = set()
        self.latest_instruction_id = 0
        self.next_instruction_id = 1
        self.instruction_count = 0
        self.accepted = 0
        self.rejected = 0
        self.action_digest: Counter = Counter()
        self._emit("header", {
            "type": "header", "version": 1, "tick": 0,
            "session": session.to_dict(),
            "effective_game": self.config.to_dict(),
            "state_hash": state_hash(self.state)})
        self.frames.append(summarize_frame(self.state, 0))

    # -- plumbing ----------------------------------------------------

    def _emit(self, kind: str, record: dict[str, Any]) -> None:
        self.log.append(record)
        if self.listener is not None:
            self.listener(kind, record)

    # -- stepping ----------------------------------------------------

    def advance_tick(self, manual: list[Command] | None = None,
                     ts_ms: float | None = None) -> None:
        """One Algorithm-1 iteration: act, merge, step, sample, log."""
        if self.state.is_terminal:
            raise SessionEndedError("episode already terminal")
        bt_actions = bt_tick(self.policy, self.state, 0)
        opp_actions = opponent_actions(self.state, self.profile,
                                       self.config.rng_seed)
        if manual:
            merged = merge_manual_actions(
                bt_actions, ActionSet(0, list(manual)))
        else:
            merged = bt_actions
        _, result = step(self.state, merged, opp_actions)
        for cmd in merged.commands:
            self.action_digest[cmd.kind] += 1
        record: dict[str, Any] = {
            "type": "tick", "tick": self.state.tick,
            "policy_revision": self.policy.revision}
        k = self.session.hash_every
        if (k and self.state.tick % k == 0) or self.state.is_terminal:
            record["state_hash"] = state_hash(self.state)
        if bt_actions.commands:
            record["bt_actions"] = [c.to_dict() for c in bt_actions.commands]
        if manual:
            record["manual_actions"] = [c.to_dict() for c in manual]
        if opp_actions.commands:
            record["opponent_actions"] = [c.to_dict()
                                          for c in opp_actions.commands]
        if result.events:
            record["events"] = list(result.events)
        if ts_ms is not None:
            record["ts_ms"] = round(ts_ms, 1)
        # Sample before emitting so listeners see the frame for this tick.
        if self.state.tick % WINDOW_STRIDE == 0:
            self.frames.append(summarize_frame(self.state, 0))
        self._emit("tick", record)
        if self.state.is_terminal:
            self._finish(result.reward)

    def _finish(self, reward: int) -> None:
        self._emit("end", {
            "type": "end", "tick": self.state.tick,
            "outcome": _outcome(self.state.winner), "reward": reward,
            "final_hash": state_hash(self.state),
            "policy_revisions": self.policy.revision,
            "instructions": self.instruction_count,
            "accepted": self.accepted, "rejected": self.rejected})

    # -- instructions and proposals ---------------------------------

    def build_instruction(self, text: str, channel: str = "chat",
                          ) -> Instruction:
        if self.state.is_terminal:
            raise SessionEndedError("session ended; instruction rejected")
        instruction = Instruction(id=self.next_instruction_id,
                                  tick_received=self.state.tick,
                                  text=text, channel=channel)
        self.next_instruction_id += 1
        return instruction

    def log_instruction(self, instruction: Instruction) -> None:
        self.instruction_count += 1
        self.latest_instruction_id = instruction.id
        if self.pending is not None:
            self._supersede(self.pending)
            self.pending = None
        self._emit("instruction", {
            "type": "instruction", "tick": self.state.tick,
            "id": instruction.id, "text": instruction.text,
            "channel": instruction.channel})

    def build_request(self, instruction: Instruction):
        window = summarize_window(list(self.frames), WINDOW_STRIDE)
        digest = dict(self.action_digest)
        self.action_digest.clear()
        return integrate_context(window, self.policy, digest, instruction,
                                 self.library)

    def _supersede(self, proposal: PolicyProposal) -> None:
        self.stale_ids.add(proposal.id)
        self._emit("decision", {
            "type": "decision", "tick": self.state.tick,
            "proposal_id": proposal.id, "decision": "superseded",
            "by": "system", "revision_after": self.policy.revision})

    def receive_proposal(self, proposal: PolicyProposal,
                         latency_ms: float) -> None:
        """File the proposal; it goes stale if a newer instruction won.

        Proposal ids mirror instruction ids, so comparing against the
        latest instruction catches both a superseded pending proposal
        and a reply that was still in flight when the player spoke
        again.
        """
        self._emit("proposal", {
            "type": "proposal", "tick": self.state.tick,
            "proposal": proposal.to_dict(),
            "advisor_latency_ms": round(latency_ms, 2)})
        if proposal.id != self.latest_instruction_id:
            self._supersede(proposal)
            return
        self.pending = proposal

    def receive_advisor_error(self, instruction_id: int,
                              error: Exception) -> None:
        self._emit("advisor_error", {
            "type": "advisor_error", "tick": self.state.tick,
            "instruction_id": instruction_id,
            "error": type(error).__name__, "detail": str(error)})

    def decide(self, proposal_id: int, decision: str,
               by: str = "player") -> Policy:
        if decision not in DECISIONS:
            raise LoopError(f"decision must be one of {DECISIONS}")
        if proposal_id in self.stale_ids or proposal_id in self.decided_ids:
            raise StaleProposalError(f"proposal {proposal_id} is stale")
        if self.pending is None or self.pending.id != proposal_id:
            raise UnknownProposalError(f"no pending proposal {proposal_id}")
        proposal = self.pending
        self.pending = None
        self.decided_ids.add(proposal_id)
        if decision == "approve":
            try:
                self.policy = materialize(proposal, self.policy,
                                          self.library)
            except AdvisorError as exc:
                # Deltas legal against the basis can still be illegal
                # against the live policy; treat as a logged rejection.
                self.receive_advisor_error(proposal.id, exc)
                self.rejected += 1
                self._emit("decision", {
                    "type": "decision", "tick": self.state.tick,
                    "proposal_id": proposal_id, "decision": "reject",
                    "by": "system",
                    "revision_after": self.policy.revision})
                return self.policy
            self.accepted += 1
        else:
            self.rejected += 1
        self._emit("decision", {
            "type": "decision", "tick": self.state.tick,
            "proposal_id": proposal_id, "decision": decision, "by": by,
            "revision_after": self.policy.revision})
        return self.policy

    def result(self) -> EpisodeResult:
        return EpisodeResult(
            outcome=_outcome(self.state.winner), ticks=self.state.tick,
            policy_revision_count=self.policy.revision,
            instruction_count=self.instruction_count,
            proposals_accepted=self.accepted,
            proposals_rejected=self.rejected,
            final_hash=state_hash(self.state))


def _validate_script(script) -> list[tuple[int, str, str | None]]:
    entries: list[tuple[int, str, str | None]] = []
    last_tick = -1
    for entry in script or []:
        tick_at, text, decision = entry
        if tick_at < last_tick:
            raise LoopError("instruction script ticks must be monotone")
        if decision is not None and decision not in DECISIONS:
            raise LoopError(f"script decision must be approve/reject/None, "
                            f"got {decision!r}")
        entries.append((int(tick_at), str(text), decision))
        last_tick = tick_at
    return entries


def run_episode(session: SessionConfig,
                instruction_script=None,
                listener: Callable[[str, dict[str, Any]], None]
                | None = None,
                ) -> tuple[EpisodeResult, EpisodeLog]:
    """Deterministic lockstep episode driven by an optional script.

    Script entries are (tick, text, decision): the instruction is
    delivered as soon as the simulation reaches that tick, the advisor
    is called inline, and the scripted decision (or auto-approval) is
    applied immediately, taking effect on the next tick.
    """
    script = _validate_script(instruction_script)
    core = EpisodeCore(session, listener)
    backend = make_advisor(session.advisor)
    cursor = 0

    def deliver_due() -> None:
        nonlocal cursor
        while cursor < len(script) and script[cursor][0] <= core.state.tick:
            _, text, decision = script[cursor]
            cursor += 1
            instruction = core.build_instruction(text)
            core.log_instruction(instruction)
            request = core.build_request(instruction)
            started = time.perf_counter()
            try:
                proposal = backend.adjust_policy(request)
            except AdvisorError as exc:
                core.receive_advisor_error(instruction.id, exc)
                continue
            latency = (time.perf_counter() - started) * 1000.0
            core.receive_proposal(proposal, latency)
            if core.pending is None:
                continue
            if decision is None and session.auto_approve:
                decision = "approve"
            if decision is not None:
                core.decide(proposal.id, decision, by="script")

    deliver_due()
    while not core.state.is_terminal:
        core.advance_tick()
        if not core.state.is_terminal:
            deliver_due()
    return core.result(), core.log


class CommandLoop:
    """Wall-clock session driver; inputs arrive through a serialized inbox.

    The loop thread alone touches the game state. Chat, decisions, and
    manual actions are queued; the advisor runs on a one-worker executor
    so a slow backend never stalls ticking in realtime mode. In
    lockstep mode the loop waits for each advisor reply between ticks.
    """

    def __init__(self, session: SessionConfig,
                 listener: Callable[[str, dict[str, Any]], None]
                 | None = None,
                 log_path: str | None = None,
                 autostart_episode: bool = False) -> None:
        self.session = session
        self.core = EpisodeCore(session, listener)
        self.backend = make_advisor(session.advisor)
        self.log_path = log_path
        self._inbox: queue.Queue = queue.Queue()
        self._advisor_pool = ThreadPoolExecutor(max_workers=1)
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._id_lock = threading.Lock()
        self.phase = PHASE_RUNNING if autostart_episode else PHASE_AWAITING
        self._calls_in_flight = 0
        self._manual_backlog: list[Command] = []

    # -- external surface (any thread) ------------------------------

    def submit_chat(self, text: str, channel: str = "chat") -> int:
        if not text or not text.strip():
            raise ValueError("instruction text must be non-empty")
        if self.phase == PHASE_ENDED:
            raise SessionEndedError("session ended")
        with self._id_lock:
            instruction_id = self.core.next_instruction_id
            self.core.next_instruction_id += 1
        self._inbox.put(("chat", instruction_id, text, channel))
        return instruction_id

    def submit_decision(self, proposal_id: int, decision: str,
                        timeout: float = 5.0) -> dict[str, Any]:
        reply: queue.Queue = queue.Queue(maxsize=1)
        self._inbox.put(("decision", proposal_id, decision, reply))
        try:
            outcome = reply.get(timeout=timeout)
        except queue.Empty:
            raise LoopError("decision was not processed in time") from None
        if isinstance(outcome, Exception):
            raise outcome
        return outcome

    def submit_manual(self, commands: list[Command]) -> None:
        if commands:
            self._inbox.put(("manual", commands))

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="commandpost-loop")
        self._thread.start()

    def stop(self, timeout: float = 10.0) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=timeout)
        self._flush_log()

    # -- loop internals (loop thread only) ---------------------------

    def _flush_log(self) -> None:
        if self.log_path is not None:
            self.core.log.write(self.log_path)

    def _handle_chat(self, instruction_id: int, text: str,
                     channel: str) -> None:
        core = self.core
        if core.state.is_terminal:
            return
        instruction = Instruction(id=instruction_id,
                                  tick_received=core.state.tick,
                                  text=text, channel=channel)
        core.log_instruction(instruction)
        if self.phase == PHASE_AWAITING:
            request = None
            opening_frame = core.frames[-1]
        else:
            request = core.build_request(instruction)
            opening_frame = None
        started = time.perf_counter()

        def call():
            if request is None:
                return self.backend.select_initial_policy(
                    opening_frame, instruction, core.library)
            return self.backend.adjust_policy(request)

        def deliver(future) -> None:
            latency = (time.perf_counter() - started) * 1000.0
            error = future.exception()
            if error is not None:
                self._inbox.put(("advisor_error", instruction.id, error))
            else:
                self._inbox.put(("proposal", future.result(), latency))

        future = self._advisor_pool.submit(call)
        self._calls_in_flight += 1
        future.add_done_callback(deliver)
        if self.session.mode == "lockstep":
            # Deterministic mode: the sim pauses for the advisor.
            while self._calls_in_flight > 0:
                self._drain_one(block=True)

    def _handle_decision(self, proposal_id: int, decision: str,
                         reply: queue.Queue) -> None:
        was = self.phase
        if was == PHASE_AWAITING and decision == "approve":
            # Flip before logging so the decision record's listeners see
            # the post-decision phase; rolled back if nothing landed.
            self.phase = PHASE_RUNNING
        try:
            before = self.core.policy.revision
            policy = self.core.decide(proposal_id, decision, by="player")
            if policy.revision == before:
                self.phase = was
            reply.put({"proposal_id": proposal_id, "decision": decision,
                       "policy_revision": policy.revision})
        except LoopError as exc:
            self.phase = was
            reply.put(exc)

    def _drain_one(self, block: bool) -> bool:
        try:
            message = self._inbox.get(block=block, timeout=0.05)
        except queue.Empty:
            return False
        kind = message[0]
        if kind == "chat":
            self._handle_chat(message[1], message[2], message[3])
        elif kind == "decision":
            self._handle_decision(message[1], message[2], message[3])
        elif kind == "manual":
            self._manual_backlog.extend(message[1])
        elif kind == "proposal":
            self._calls_in_flight -= 1
            proposal, latency = message[1], message[2]
            self.core.receive_proposal(proposal, latency)
            if (self.core.pending is not None
                    and self.session.auto_approve):
                was = self.phase
                if was == PHASE_AWAITING:
                    self.phase = PHASE_RUNNING
                before = self.core.policy.revision
                policy = self.core.decide(proposal.id, "approve", by="auto")
                if policy.revision == before:
                    self.phase = was
        elif kind == "advisor_error":
            self._calls_in_flight -= 1
            self.core.receive_advisor_error(message[1], message[2])
        return True

    def _run(self) -> None:
        interval = 1.0 / self.session.tick_rate
        origin = time.monotonic()
        deadline = origin
        while not self._stop.is_set():
            while self._drain_one(block=False):
                pass
            if self.phase == PHASE_AWAITING:
                time.sleep(0.01)
                deadline = time.monotonic()
                continue
            if self.core.state.is_terminal:
                break
            now = time.monotonic()
            if self.session.mode == "realtime":
                if now < deadline:
                    time.sleep(min(deadline - now, interval))
                    continue
                deadline = max(deadline + interval, now)
            manual = self._manual_backlog
            self._manual_backlog = []
            ts_ms = (time.monotonic() - origin) * 1000.0 \
                if self.session.mode == "realtime" else None
            self.core.advance_tick(manual or None, ts_ms=ts_ms)
        self.phase = PHASE_ENDED
        self._advisor_pool.shutdown(wait=False)
        self._flush_log()
