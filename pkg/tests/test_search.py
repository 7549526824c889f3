import json

import pytest

from kitchenqd.agents.backends import BackendFailure, ScriptedBackend
from kitchenqd.episode_log import EpisodeLog
from kitchenqd.measures import MeasureVector, compute_measures
from kitchenqd.qd.archive import Archive, replay_insertions, Elite
from kitchenqd.qd.search import (
    ConfigError,
    EvaluationFailed,
    QDConfig,
    episode_seeds,
    evaluate,
    load_config,
    load_evaluations,
    median_measures,
    run_planqd,
    run_random_mutation,
)

SMALL = QDConfig(n_iter=4, batch_size=2, n_repeat=2, horizon=80, seed=3)


class FailingAgents:
    def complete(self, prompt, params=None):
        raise BackendFailure("endpoint down")


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_default_budget_is_100():
    assert QDConfig().budget == 100


def test_smallest_run(tmp_path):
    cfg = QDConfig(n_iter=1, batch_size=1, n_repeat=2, horizon=60)
    archive = run_planqd(cfg, tmp_path)
    assert len(archive) in (0, 1)
    recs = load_evaluations(tmp_path)
    assert len(recs) == 1 and recs[0]["parent_cell"] is None


def test_budget_exactness_and_files(tmp_path):
    archive = run_planqd(SMALL, tmp_path)
    recs = load_evaluations(tmp_path)
    assert len(recs) == SMALL.budget == 8
    assert [r["index"] for r in recs] == list(range(8))
    state = json.loads((tmp_path / "archive.json").read_text())
    assert state["iterations_done"] == 4 and state["algorithm"] == "planqd"
    assert Archive.load(tmp_path / "archive.json") == archive
    assert json.loads((tmp_path / "config.json").read_text())["n_repeat"] == 2
    assert len(list((tmp_path / "logs").glob("*.jsonl"))) == 8 * 2


def test_archive_equals_replay_of_records(tmp_path):
    archive = run_planqd(SMALL, tmp_path)
    stream = [Elite(tuple(r["prompts"]), r["objective"], r["measures"]) for r in load_evaluations(tmp_path)]
    replayed = replay_insertions(archive.config, stream)
    assert {c: e.prompts for c, e in replayed} == {c: e.prompts for c, e in archive}


def test_elites_reproduce_from_their_logs(tmp_path):
    archive = run_planqd(SMALL, tmp_path)
    assert len(archive)
    for _, elite in archive:
        vectors = [compute_measures(EpisodeLog.load(tmp_path / ref)) for ref in elite.logs]
        assert [v.as_dict() for v in vectors] == [dict(r) for r in elite.repeats]
        assert median_measures(vectors) == dict(elite.measures)


def test_parents_come_from_the_archive(tmp_path):
    run_planqd(SMALL, tmp_path)
    recs = load_evaluations(tmp_path)
    filled = set()
    for it in range(SMALL.n_iter):
        batch = [r for r in recs if r["iteration"] == it]
        for r in batch:
            if r["parent_cell"] is None:
                assert not filled and r["parent_prompts"] == [SMALL.start_prompt()] * 2
            else:
                assert tuple(r["parent_cell"]) in filled
            assert any(r["direction"])
        filled |= {tuple(r["cell"]) for r in batch if r["status"] == "ok"}


def test_determinism_and_resume(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    run_planqd(SMALL, a)
    run_planqd(SMALL, b)
    assert _files(a) == _files(b)
    run_planqd(SMALL, c, stop_after=2)
    assert json.loads((c / "archive.json").read_text())["iterations_done"] == 2
    run_planqd(SMALL, c)
    assert _files(a) == _files(c)


def test_resume_discards_partial_iteration(tmp_path):
    run_planqd(SMALL, tmp_path, stop_after=2)
    with (tmp_path / "evaluations.jsonl").open("a") as fh:
        fh.write(json.dumps({"iteration": 2, "index": 4, "junk": True}) + "\n")
    run_planqd(SMALL, tmp_path)
    recs = load_evaluations(tmp_path)
    assert len(recs) == 8 and not any("junk" in r for r in recs)


def test_resume_rejects_other_config(tmp_path):
    run_planqd(SMALL, tmp_path, stop_after=1)
    with pytest.raises(ConfigError):
        run_planqd(SMALL.with_overrides(seed=99), tmp_path)
    with pytest.raises(ConfigError):
        run_random_mutation(SMALL, tmp_path)


def test_random_baseline(tmp_path):
    archive = run_random_mutation(SMALL, tmp_path / "r1")
    recs = load_evaluations(tmp_path / "r1")
    assert len(recs) == 8
    assert all(r["parent_cell"] is None and "direction" not in r for r in recs)
    assert all(r["algorithm"] == "random" for r in recs)
    again = run_random_mutation(SMALL, tmp_path / "r2")
    assert again == archive
    # Each pair of candidates in an iteration comes from one request for four personalities.
    assert len({p for r in recs[:2] for p in r["prompts"]}) >= 2


def test_even_median_rule():
    def v(j):
        return MeasureVector(j, 10, 0.1, 0.5, (0,) * 9)

    med = median_measures([v(100), v(120), v(220), v(300)])
    assert med["fitness"] == 170


def test_evaluate_identical_seeds_give_identical_repeats(open_layout):
    cfg = QDConfig(n_repeat=3, horizon=60)
    ev = evaluate(("a", "b"), cfg, ScriptedBackend(0), seeds=[5, 5, 5], layout=open_layout)
    assert ev.repeats[0] == ev.repeats[1] == ev.repeats[2]
    assert ev.objective == ev.repeats[0].fitness
    assert len(set(episode_seeds(0, 0, 4))) == 4


def test_failure_is_recorded_then_raised(tmp_path):
    with pytest.raises(BackendFailure):
        run_planqd(SMALL, tmp_path, agent_backend=FailingAgents(), mutator_backend=ScriptedBackend(0))
    recs = load_evaluations(tmp_path)
    assert len(recs) == 1 and recs[0]["status"] == "failed"


def test_failures_consume_budget_when_skipped(tmp_path):
    cfg = SMALL.with_overrides(on_failure="skip")
    archive = run_planqd(cfg, tmp_path, agent_backend=FailingAgents(), mutator_backend=ScriptedBackend(0))
    recs = load_evaluations(tmp_path)
    assert len(recs) == 8 and all(r["status"] == "failed" for r in recs)
    assert len(archive) == 0


def test_evaluate_wraps_backend_failure(open_layout):
    with pytest.raises(EvaluationFailed):
        evaluate(("a", "b"), QDConfig(n_repeat=1, horizon=10), FailingAgents(), layout=open_layout)


def test_config_files(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("layout: forced\nn_iter: 3\nqd_measures: [diff_meat_picked, specialization]\n")
    cfg = load_config(p)
    assert cfg.layout == "forced" and cfg.qd_measures == ("diff_meat_picked", "specialization")
    assert QDConfig.from_dict(cfg.to_dict()) == cfg
    p.write_text("bogus_key: 1\n")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        QDConfig(qd_measures=("nope",))
    assert SMALL.search_hash() == SMALL.with_overrides(n_iter=9, save_logs=False).search_hash()
    assert SMALL.search_hash() != SMALL.with_overrides(seed=4).search_hash()
