"""Instruction-to-proposal advisors behind a single interface.

Two backends: a deterministic keyword-table advisor that serves as the
test oracle, and an HTTP client speaking the common chat-completion
shape. Both turn a rendered request into a policy proposal; neither
ever touches the live game state.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping

import httpx

from .bt.library import PolicyPreset, load_policy_library
from .bt.modulators import ModulatorError, Policy, apply_modulators
from .messages import Instruction, MessageError, PolicyProposal
from .summarize import AdvisorRequest, FrameSummary

SCRIPTED = "scripted"
HTTP = "http"
BACKENDS = (SCRIPTED, HTTP)
DEFAULT_API_KEY_ENV = "COMMANDPOST_API_KEY"
DEFAULT_TIMEOUT_MS = 8000


class AdvisorError(Exception):
    """Base for advisor failures; the loop logs these and plays on."""


class BackendUnavailableError(AdvisorError):
    pass


class AdvisorTimeoutError(AdvisorError):
    pass


class MalformedResponseError(AdvisorError):
    pass


class InvariantViolationError(AdvisorError):
    pass


@dataclass(frozen=True, slots=True)
class AdvisorConfig:
    backend: str = SCRIPTED
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, "
                             f"got {self.backend!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.backend == HTTP and not (self.endpoint and self.model):
            raise ValueError("http backend requires endpoint and model")

    def to_dict(self) -> dict[str, Any]:
        return {"backend": self.backend, "endpoint": self.endpoint,
                "model": self.model, "temperature": self.temperature,
                "timeout_ms": self.timeout_ms,
                "api_key_env": self.api_key_env}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "AdvisorConfig":
        return cls(backend=str(payload.get("backend", SCRIPTED)),
                   endpoint=str(payload.get("endpoint", "")),
                   model=str(payload.get("model", "")),
                   temperature=float(payload.get("temperature", 0.0)),
                   timeout_ms=int(payload.get("timeout_ms",
                                              DEFAULT_TIMEOUT_MS)),
                   api_key_env=str(payload.get("api_key_env",
                                               DEFAULT_API_KEY_ENV)))


@lru_cache(maxsize=1)
def load_advisor_rules() -> dict[str, Any]:
    text = resources.files("commandpost.data").joinpath(
        "advisor_rules.json").read_text("utf-8")
    return json.loads(text)


def _first_match(rules: list[dict[str, Any]],
                 text: str) -> dict[str, Any] | None:
    for rule in rules:
        for phrase in rule["match"]:
            if re.search(rf"\b{re.escape(phrase)}\b", text, re.IGNORECASE):
                return rule
    return None


def validate_proposal(proposal: PolicyProposal,
                      library: Mapping[str, PolicyPreset],
                      current: Policy | None = None) -> None:
    """Reject proposals whose basis or deltas cannot produce a policy.

    Deltas are checked against the policy they would actually land on:
    the caller's current policy when the basis names it, the library
    preset otherwise.
    """
    if proposal.basis not in library:
        raise InvariantViolationError(
            f"basis {proposal.basis!r} is not in the policy library")
    if current is not None and current.policy_id == proposal.basis:
        start = current
    else:
        start = Policy(proposal.basis, library[proposal.basis].modulators, 0)
    try:
        apply_modulators(start, proposal.deltas)
    except ModulatorError as exc:
        raise InvariantViolationError(str(exc)) from exc


def materialize(proposal: PolicyProposal, current: Policy,
                library: Mapping[str, PolicyPreset]) -> Policy:
    """Approved proposal -> next active policy, revision bumped once."""
    if proposal.basis == current.policy_id:
        base = current
    else:
        if proposal.basis not in library:
            raise InvariantViolationError(
                f"basis {proposal.basis!r} is not in the policy library")
        base = Policy(proposal.basis, library[proposal.basis].modulators,
                      current.revision)
    try:
        return apply_modulators(base, proposal.deltas)
    except ModulatorError as exc:
        raise InvariantViolationError(str(exc)) from exc


class ScriptedAdvisor:
    """Ordered keyword table, first match wins; a hermetic oracle.

    Same request bytes always produce the same proposal bytes. The last
    table entry is a catch-all, so every instruction yields a proposal.
    """

    source_backend = SCRIPTED

    def select_initial_policy(
            self, s0_summary: FrameSummary, c0: Instruction,
            library: Mapping[str, PolicyPreset]) -> PolicyProposal:
        del s0_summary  # the opening pick keys off the instruction alone
        rules = load_advisor_rules()
        rule = _first_match(rules["initial"], c0.text) \
            or rules["initial_default"]
        proposal = PolicyProposal(
            id=c0.id, basis=rule["basis"], deltas={},
            rationale=rule["rationale"], source_backend=SCRIPTED,
            in_reply_to=None)
        validate_proposal(proposal, library)
        return proposal

    def adjust_policy(self, request: AdvisorRequest) -> PolicyProposal:
        rules = load_advisor_rules()
        rule = _first_match(rules["adjust"], request.instruction.text) \
            or rules["adjust_default"]
        basis = rule.get("basis", request.current_policy.policy_id)
        proposal = PolicyProposal(
            id=request.instruction.id, basis=basis,
            deltas=json.loads(json.dumps(rule.get("deltas", {}))),
            rationale=rule["rationale"], source_backend=SCRIPTED,
            in_reply_to=request.instruction.id)
        validate_proposal(proposal, load_policy_library(),
                          current=request.current_policy)
        return proposal


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _extract_json_object(raw_text: str) -> dict[str, Any]:
    candidates = [m.strip() for m in _FENCE.findall(raw_text)]
    candidates.append(raw_text)
    decoder = json.JSONDecoder()
    for chunk in candidates:
        for start in range(len(chunk)):
            if chunk[start] != "{":
                continue
            try:
                obj, _ = decoder.raw_decode(chunk[start:])
            except ValueError:
                continue
            if isinstance(obj, dict):
                return obj
    raise MalformedResponseError("no JSON object found in reply")


def parse_llm_reply(raw_text: str, *, proposal_id: int = 0,
                    in_reply_to: int | None = None,
                    current: Policy | None = None,
                    library: Mapping[str, PolicyPreset] | None = None,
                    ) -> PolicyProposal:
    """Lift a free-text completion into a validated proposal.

    Expects one JSON object {basis, deltas, rationale}, fenced or bare,
    surrounded by any amount of prose. Raises MalformedResponseError if
    nothing parses, InvariantViolationError if the object names an
    unknown basis or illegal deltas.
    """
    obj = _extract_json_object(raw_text)
    basis = obj.get("basis")
    rationale = obj.get("rationale")
    deltas = obj.get("deltas", {})
    if not isinstance(basis, str) or not isinstance(rationale, str):
        raise MalformedResponseError(
            "reply object must carry string basis and rationale")
    if not isinstance(deltas, dict):
        raise MalformedResponseError("deltas must be an object")
    try:
        proposal = PolicyProposal(
            id=proposal_id, basis=basis, deltas=deltas,
            rationale=rationale, source_backend=HTTP,
            in_reply_to=in_reply_to)
    except MessageError as exc:
        raise MalformedResponseError(str(exc)) from exc
    validate_proposal(proposal, library or load_policy_library(),
                      current=current)
    return proposal


class HttpAdvisor:
    """Chat-completion client; any OpenAI-shaped endpoint works.

    The API key is read from the configured environment variable at
    call time and sent as a bearer token when present.
    """

    source_backend = HTTP

    def __init__(self, config: AdvisorConfig,
                 client: httpx.Client | None = None) -> None:
        if config.backend != HTTP:
            raise ValueError("HttpAdvisor requires an http backend config")
        self.config = config
        self._client = client or httpx.Client(
            timeout=config.timeout_ms / 1000.0)

    def close(self) -> None:
        self._client.close()

    def _complete(self, prompt: str) -> str:
        headers = {}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {"model": self.config.model,
                   "messages": [{"role": "user", "content": prompt}],
                   "temperature": self.config.temperature}
        try:
            response = self._client.post(self.config.endpoint, json=payload,
                                         headers=headers)
        except httpx.TimeoutException as exc:
            raise AdvisorTimeoutError(
                f"advisor call exceeded {self.config.timeout_ms} ms") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(str(exc)) from exc
        if response.status_code != 200:
            raise BackendUnavailableError(
                f"advisor endpoint returned {response.status_code}")
        try:
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(
                "reply is not a chat completion") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("completion content is not text")
        return content

    def select_initial_policy(
            self, s0_summary: FrameSummary, c0: Instruction,
            library: Mapping[str, PolicyPreset]) -> PolicyProposal:
        from .bt.library import library_digest
        prompt = (
            "You advise the commander of faction P0 in a grid RTS.\n"
            "Pick the best opening policy for the instruction below.\n"
            "Reply with exactly one JSON object: "
            '{"basis": "<policy name>", "deltas": {}, '
            '"rationale": "<short text>"}\n'
            "Policies available:\n"
            f"{library_digest(dict(library))}\n"
            "Opening state:\n"
            f"{s0_summary.text}\n"
            f"Player instruction: {c0.text}")
        reply = self._complete(prompt)
        return parse_llm_reply(reply, proposal_id=c0.id, in_reply_to=None,
                               library=library)

    def adjust_policy(self, request: AdvisorRequest) -> PolicyProposal:
        reply = self._complete(request.rendered)
        return parse_llm_reply(reply,
                               proposal_id=request.instruction.id,
                               in_reply_to=request.instruction.id,
                               current=request.current_policy)


Advisor = ScriptedAdvisor | HttpAdvisor


def make_advisor(config: AdvisorConfig) -> Advisor:
    if config.backend == SCRIPTED:
        return ScriptedAdvisor()
    return HttpAdvisor(config)
