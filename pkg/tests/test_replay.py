"""Replay verification: recorded episodes must re-derive hash for hash."""
from __future__ import annotations

import copy

import pytest

from commandpost.engine import default_config, reset
from commandpost.loop import SessionConfig, run_episode
from commandpost.replay import ReplayError, replay_file, replay_records


def recorded(seed: int = 11, script=None, **kwargs):
    config = SessionConfig(game=default_config(rng_seed=seed,
                                               tick_limit=400), **kwargs)
    return run_episode(config, script)


def test_a_clean_log_replays_perfectly():
    result, log = recorded()
    report = replay_records(log.records)
    assert report.ok
    assert report.ticks_replayed == result.ticks
    assert report.hashes_matched == report.hashes_checked
    assert report.first_mismatch_tick is None
    assert report.summary().startswith("OK: ")


def test_replay_honours_approved_policy_changes():
    _, log = recorded(script=[(40, "sky army please", "approve"),
                              (150, "expand the economy", "approve")])
    assert replay_records(log.records).ok


def test_replay_reads_logs_back_from_disk(tmp_path):
    _, log = recorded()
    path = str(tmp_path / "episode.jsonl")
    log.write(path)
    assert replay_file(path).ok


def test_a_tampered_hash_is_pinned_to_its_tick():
    _, log = recorded()
    records = copy.deepcopy(log.records)
    victims = [r for r in records
               if r["type"] == "tick" and "state_hash" in r
               and r["tick"] == 200]
    victims[0]["state_hash"] = "0" * 16
    report = replay_records(records)
    assert not report.ok
    assert report.first_mismatch_tick == 200
    assert "first divergence at tick 200" in report.summary()


def test_replay_stops_at_the_first_divergence():
    _, log = recorded()
    records = copy.deepcopy(log.records)
    for r in records:
        if r["type"] == "tick" and "state_hash" in r and r["tick"] >= 100:
            r["state_hash"] = "f" * 16
    report = replay_records(records)
    assert report.first_mismatch_tick == 100
    # checked the 99 good ticks, the bad one, and no more
    assert report.hashes_checked == 101  # includes the header hash
    assert report.hashes_matched == 100


def test_dropping_an_approval_diverges_once_the_policy_acts():
    config = SessionConfig(game=default_config(rng_seed=11, tick_limit=600))
    _, log = run_episode(config, [(50, "more workers", "approve")])
    records = [r for r in copy.deepcopy(log.records)
               if not (r["type"] == "decision"
                       and r["decision"] == "approve")]
    report = replay_records(records)
    assert not report.ok
    # identical up to the decision tick, diverging once the raised worker
    # target changes a production choice
    assert report.first_mismatch_tick is not None
    assert report.first_mismatch_tick > 50


def test_forged_manual_actions_count_as_divergence():
    _, log = recorded()
    records = copy.deepcopy(log.records)
    # pulling a live worker off its mineral line must change the hashes
    worker = next(u for u in reset(default_config(rng_seed=11)).
                  factions[0].units if u.kind == "Worker")
    target = next(r for r in records
                  if r["type"] == "tick" and r["tick"] == 60)
    target["manual_actions"] = [
        {"type": "move", "unit": worker.id, "cell": [1, 1]}]
    report = replay_records(records)
    assert not report.ok
    assert report.first_mismatch_tick == 60


def test_an_approval_without_its_proposal_is_an_error():
    _, log = recorded(script=[(50, "sky army please", "approve")])
    records = [r for r in copy.deepcopy(log.records)
               if r["type"] != "proposal"]
    with pytest.raises(ReplayError):
        replay_records(records)


@pytest.mark.parametrize("records", [
    [],
    [{"type": "tick", "tick": 1}],
])
def test_logs_missing_the_header_are_rejected(records):
    with pytest.raises(ReplayError):
        replay_records(records)


def test_truncated_logs_still_verify_their_prefix():
    _, log = recorded()
    cut = [r for r in log.records
           if r.get("tick", 0) <= 150 and r["type"] != "end"]
    report = replay_records(cut)
    assert report.ok
    assert report.ticks_replayed == 150
