"""Shared message vocabulary: player instructions and policy proposals.

Both the summarizer and the advisor traffic in these, so they live in a
leaf module below either. The advisor re-exports them as its public
surface.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

INSTRUCTION_CHANNELS = ("chat", "transcript")


class MessageError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Instruction:
    """One natural-language directive from the player.

    Ids are assigned monotonically by whoever feeds the loop; the text is
    carried verbatim end to end.
    """

    id: int
    tick_received: int
    text: str
    channel: str = "chat"

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise MessageError("instruction text must be non-empty")
        if self.channel not in INSTRUCTION_CHANNELS:
            raise MessageError(
                f"channel must be one of {INSTRUCTION_CHANNELS}, "
                f"got {self.channel!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "tick_received": self.tick_received,
                "text": self.text, "channel": self.channel}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "Instruction":
        return cls(id=int(payload["id"]),
                   tick_received=int(payload["tick_received"]),
                   text=str(payload["text"]),
                   channel=str(payload.get("channel", "chat")))


@dataclass(frozen=True, slots=True)
class PolicyProposal:
    """Advisor output: a library policy plus modulator deltas.

    The proposal id mirrors the instruction it answers, which keeps ids
    unique per episode and makes the scripted backend a pure function of
    its request. `in_reply_to` is None only for the opening proposal.
    """

    id: int
    basis: str
    deltas: dict[str, Any]
    rationale: str
    source_backend: str
    in_reply_to: int | None = None

    def __post_init__(self) -> None:
        if not self.basis:
            raise MessageError("proposal basis must name a library policy")
        if not self.rationale:
            raise MessageError("proposal rationale must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "basis": self.basis, "deltas": self.deltas,
                "rationale": self.rationale,
                "source_backend": self.source_backend,
                "in_reply_to": self.in_reply_to}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "PolicyProposal":
        reply_to = payload.get("in_reply_to")
        return cls(id=int(payload["id"]), basis=str(payload["basis"]),
                   deltas=dict(payload["deltas"]),
                   rationale=str(payload["rationale"]),
                   source_backend=str(payload["source_backend"]),
                   in_reply_to=None if reply_to is None else int(reply_to))
