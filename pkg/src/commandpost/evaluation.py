"""Batch measurement: win-rate ladders and instruction-following proxy.

Everything here is an automated stand-in for live human play: scripted
players, the keyword advisor, fixed seeds. Reports say so up front.
The CSV is byte-stable for a given set of inputs so diffs in CI mean
real behavior changes, not formatting noise.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import advisor as advisor_mod
from .advisor import Advisor, ScriptedAdvisor, materialize
from .bt import tick as bt_tick
from .bt.library import load_policy_library, make_policy
from .bt.modulators import ModulatorSet
from .engine import GameConfig, default_config, reset, step
from .loop import SessionConfig, run_episode
from .messages import Instruction, PolicyProposal
from .summarize import AdvisorRequest, integrate_context, summarize_frame, \
    summarize_window

PROXY_DISCLAIMER = ("automated proxy metrics: scripted players and a "
                    "keyword advisor, not human evaluations")

EVAL_TICK_LIMIT = 8000


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------- fixtures

@dataclass(frozen=True, slots=True)
class InstructionFixture:
    id: str
    text: str
    tag: str
    expect: dict[str, Any]


@lru_cache(maxsize=1)
def load_instruction_corpus() -> tuple[InstructionFixture, ...]:
    text = resources.files("commandpost.data").joinpath(
        "instruction_corpus.json").read_text("utf-8")
    return tuple(InstructionFixture(id=e["id"], text=e["text"],
                                    tag=e["tag"], expect=e["expect"])
                 for e in json.loads(text))


# ------------------------------------------------------------- predicates

def _weights(mods: ModulatorSet) -> tuple[float, float, float]:
    w = mods.weights
    return (w.get("Melee", 0.0), w.get("Ranged", 0.0), w.get("Air", 0.0))


def _p_air_dominant(proposal, mods, request, expect) -> bool:
    melee, ranged, air = _weights(mods)
    return air > 0 and air >= 2 * (melee + ranged)


def _p_ground_floor_air_dominant(proposal, mods, request, expect) -> bool:
    melee, ranged, air = _weights(mods)
    return (melee + ranged) > 0 and air >= 2 * (melee + ranged)


def _p_basis_is(proposal, mods, request, expect) -> bool:
    return proposal.basis == expect["name"]


def _p_composition_favors(proposal, mods, request, expect) -> bool:
    unit = expect["unit"]
    w = mods.weights
    favored = w.get(unit, 0.0)
    return all(favored > value for kind, value in w.items() if kind != unit)


def _p_threshold_at_most(proposal, mods, request, expect) -> bool:
    return mods.attack_supply_threshold <= expect["value"]


def _p_turrets_on(proposal, mods, request, expect) -> bool:
    return mods.build_turrets


def _p_max_bases_at_least(proposal, mods, request, expect) -> bool:
    return mods.max_bases >= expect["value"]


def _p_worker_target_at_least(proposal, mods, request, expect) -> bool:
    return mods.worker_target_per_base >= expect["value"]


def _p_null_change(proposal, mods, request, expect) -> bool:
    return (proposal.deltas == {}
            and proposal.basis == request.current_policy.policy_id)


PREDICATES: dict[str, Callable[..., bool]] = {
    "air_dominant": _p_air_dominant,
    "ground_floor_air_dominant": _p_ground_floor_air_dominant,
    "basis_is": _p_basis_is,
    "composition_favors": _p_composition_favors,
    "threshold_at_most": _p_threshold_at_most,
    "turrets_on": _p_turrets_on,
    "max_bases_at_least": _p_max_bases_at_least,
    "worker_target_at_least": _p_worker_target_at_least,
    "null_change": _p_null_change,
}


def check_fixture(fixture: InstructionFixture, proposal: PolicyProposal,
                  request: AdvisorRequest) -> bool:
    kind = fixture.expect["kind"]
    if kind not in PREDICATES:
        raise EvaluationError(f"unknown predicate kind {kind!r}")
    mods = materialize(proposal, request.current_policy,
                       load_policy_library()).modulators
    return PREDICATES[kind](proposal, mods, request, fixture.expect)


# ---------------------------------------------- canonical scoring context

_CANONICAL_SEED = 101
_CANONICAL_DIFFICULTY = 2
_CANONICAL_TICKS = 300


@lru_cache(maxsize=1)
def _canonical_context():
    """Mid-game window every fixture is scored against, fixed forever.

    Built from a deterministic no-instruction rollout so the advisor
    sees a realistic situation rather than an empty opening.
    """
    from .loop import EpisodeCore

    session = SessionConfig(
        game=default_config(rng_seed=_CANONICAL_SEED,
                            tick_limit=EVAL_TICK_LIMIT),
        opponent_difficulty=_CANONICAL_DIFFICULTY, mode="lockstep",
        hash_every=0)
    core = EpisodeCore(session)
    while core.state.tick < _CANONICAL_TICKS:
        core.advance_tick()
    window = summarize_window(list(core.frames))
    digest = dict(core.action_digest)
    return window, core.policy, digest


def canonical_request(instruction: Instruction) -> AdvisorRequest:
    window, policy, digest = _canonical_context()
    return integrate_context(window, policy, digest, instruction,
                             load_policy_library())


@dataclass(frozen=True, slots=True)
class FixtureResult:
    fixture_id: str
    tag: str
    matched: bool
    basis: str
    deltas: dict[str, Any]
    latency_ms: float


def instruction_following_results(
        corpus: Sequence[InstructionFixture] | None = None,
        advisor: Advisor | None = None) -> list[FixtureResult]:
    if corpus is None:
        corpus = load_instruction_corpus()
    if not corpus:
        raise EvaluationError("instruction corpus must be non-empty")
    backend = advisor if advisor is not None else ScriptedAdvisor()
    results: list[FixtureResult] = []
    for index, fixture in enumerate(corpus, start=1):
        instruction = Instruction(id=index, tick_received=_CANONICAL_TICKS,
                                  text=fixture.text)
        request = canonical_request(instruction)
        started = time.perf_counter()
        try:
            proposal = backend.adjust_policy(request)
        except advisor_mod.AdvisorError:
            results.append(FixtureResult(fixture.id, fixture.tag, False,
                                         "", {}, 0.0))
            continue
        latency = (time.perf_counter() - started) * 1000.0
        matched = check_fixture(fixture, proposal, request)
        results.append(FixtureResult(fixture.id, fixture.tag, matched,
                                     proposal.basis, dict(proposal.deltas),
                                     latency))
    return results


def score_instruction_following(
        corpus: Sequence[InstructionFixture] | None = None,
        advisor: Advisor | None = None) -> float:
    results = instruction_following_results(corpus, advisor)
    return sum(r.matched for r in results) / len(results)


# ------------------------------------------------------------- win rates

@dataclass(frozen=True, slots=True)
class EvalRow:
    difficulty: int
    policy: str
    seeds: int
    wins: int
    losses: int
    draws: int

    @property
    def rate(self) -> float:
        return self.wins / self.seeds if self.seeds else 0.0


@dataclass(slots=True)
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    seeds_used: list[int] = field(default_factory=list)
    instruction_following: float | None = None
    mean_advisor_latency_ms: float | None = None

    def to_csv(self) -> str:
        lines = ["difficulty,policy,seeds,wins,losses,draws,rate"]
        for r in self.rows:
            lines.append(f"{r.difficulty},{r.policy},{r.seeds},{r.wins},"
                         f"{r.losses},{r.draws},{r.rate:.4f}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [PROXY_DISCLAIMER,
                 f"seeds: {self.seeds_used[0]}..{self.seeds_used[-1]}"
                 if self.seeds_used else "seeds: none", ""]
        header = (f"{'difficulty':>10} {'policy':>16} {'seeds':>5} "
                  f"{'wins':>5} {'losses':>6} {'draws':>5} {'rate':>6}")
        lines.append(header)
        lines.append("-" * len(header))
        for r in self.rows:
            lines.append(f"{r.difficulty:>10} {r.policy:>16} {r.seeds:>5} "
                         f"{r.wins:>5} {r.losses:>6} {r.draws:>5} "
                         f"{r.rate:>6.2f}")
        if self.instruction_following is not None:
            lines.append("")
            lines.append("instruction-following match rate: "
                         f"{self.instruction_following:.2f}")
        if self.mean_advisor_latency_ms is not None:
            lines.append("mean advisor latency: "
                         f"{self.mean_advisor_latency_ms:.2f} ms")
        return "\n".join(lines) + "\n"


def _episode_outcome(policy: str, difficulty: int, seed: int,
                     game: GameConfig | None, tick_limit: int) -> str:
    base = game if game is not None \
        else default_config(rng_seed=seed, tick_limit=tick_limit)
    if base.rng_seed != seed:
        from dataclasses import replace

        base = replace(base, rng_seed=seed)
    session = SessionConfig(game=base, opponent_difficulty=difficulty,
                            mode="lockstep", auto_approve=True,
                            initial_policy=policy, hash_every=0)
    result, _ = run_episode(session)
    return result.outcome


def run_batch(policies: Sequence[str] | str = "balanced_macro",
              difficulties: Iterable[int] = range(1, 7),
              seeds: Iterable[int] = range(50),
              *, game: GameConfig | None = None,
              tick_limit: int = EVAL_TICK_LIMIT,
              score_instructions: bool = True,
              max_workers: int = 4) -> EvalReport:
    """Headless auto-approve ladder; deterministic for given seeds."""
    if isinstance(policies, str):
        policies = [policies]
    seed_list = list(seeds)
    difficulty_list = list(difficulties)
    if not seed_list:
        raise EvaluationError("need at least one seed")
    if not policies:
        raise EvaluationError("need at least one policy")
    for difficulty in difficulty_list:
        if not 1 <= difficulty <= 6:
            raise EvaluationError("difficulty must be within [1, 6]")
    library = load_policy_library()
    for name in policies:
        if name not in library:
            raise EvaluationError(f"unknown policy {name!r}")

    report = EvalReport(seeds_used=seed_list)
    jobs = [(policy, difficulty) for policy in policies
            for difficulty in difficulty_list]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for policy, difficulty in jobs:
            outcomes = list(pool.map(
                lambda seed: _episode_outcome(policy, difficulty, seed,
                                              game, tick_limit),
                seed_list))
            report.rows.append(EvalRow(
                difficulty=difficulty, policy=policy,
                seeds=len(seed_list),
                wins=outcomes.count("win"),
                losses=outcomes.count("loss"),
                draws=outcomes.count("draw")))
    if score_instructions:
        results = instruction_following_results()
        report.instruction_following = \
            sum(r.matched for r in results) / len(results)
        report.mean_advisor_latency_ms = \
            sum(r.latency_ms for r in results) / len(results)
    return report


def run_mirror(policy: str = "balanced_macro",
               seeds: Iterable[int] = range(50),
               *, tick_limit: int = EVAL_TICK_LIMIT) -> EvalRow:
    """Self-play symmetry check: both factions run the same policy."""
    preset = make_policy(policy)
    wins = losses = draws = 0
    seed_list = list(seeds)
    for seed in seed_list:
        config = default_config(rng_seed=seed, tick_limit=tick_limit)
        state = reset(config)
        while not state.is_terminal:
            a0 = bt_tick(preset, state, 0)
            a1 = bt_tick(preset, state, 1)
            step(state, a0, a1)
        if state.winner == 0:
            wins += 1
        elif state.winner == 1:
            losses += 1
        else:
            draws += 1
    return EvalRow(difficulty=0, policy=policy, seeds=len(seed_list),
                   wins=wins, losses=losses, draws=draws)


# --------------------------------------------------------------- figures

def render_figures(report: EvalReport, out_dir: str) -> list[str]:
    """Win-rate curve and outcome breakdown as PNG files in out_dir."""
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    paths: list[str] = []

    by_policy: dict[str, list[EvalRow]] = {}
    for row in report.rows:
        by_policy.setdefault(row.policy, []).append(row)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for policy, rows in sorted(by_policy.items()):
        rows = sorted(rows, key=lambda r: r.difficulty)
        ax.plot([r.difficulty for r in rows], [r.rate for r in rows],
                marker="o", label=policy)
    ax.set_xlabel("opponent difficulty")
    ax.set_ylabel("win rate")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("Win rate by difficulty")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path = os.path.join(out_dir, "win_rate_by_difficulty.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [f"d{r.difficulty}\n{r.policy}" if len(by_policy) > 1
              else f"d{r.difficulty}" for r in report.rows]
    wins = [r.wins for r in report.rows]
    draws = [r.draws for r in report.rows]
    losses = [r.losses for r in report.rows]
    xs = range(len(report.rows))
    ax.bar(xs, wins, label="wins", color="#2a9d8f")
    ax.bar(xs, draws, bottom=wins, label="draws", color="#e9c46a")
    ax.bar(xs, losses, bottom=[w + d for w, d in zip(wins, draws)],
           label="losses", color="#e76f51")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("episodes")
    ax.set_title("Outcome breakdown")
    ax.legend()
    path = os.path.join(out_dir, "outcome_breakdown.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths
