"""Release criteria, each run at its stated tolerance and time budget.

Every test records a line in ``conftest.ACCEPTANCE_RESULTS``; the terminal
summary prints them as PASS/FAIL/SKIP. Set ``KITCHENQD_BACKEND_URL`` (and
optionally ``KITCHENQD_MODEL``) to run the live smoke test.
"""
import itertools
import json
import os
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

import conftest
import test_sim
from helpers import fuzz_log, swap_agents
from kitchenqd.agents.backends import HTTPBackend
from kitchenqd.agents.episode import EpisodeConfig, run_episode
from kitchenqd.analysis import (
    PointSet,
    Projection,
    coverage,
    format_percent,
    pairwise_coverage_report,
    proportion_test,
    trend_table,
)
from kitchenqd.measures import COLUMNS, WORKLOAD_IDS, compute_measures
from kitchenqd.qd import QDConfig, run_planqd, run_random_mutation
from kitchenqd.qd.archive import Archive, ArchiveConfig, Elite, replay_insertions
from kitchenqd.sim import ItemKind, init_state, load_layout
from oracles import NaiveArchive
from test_measures import agree
from test_planner import check_one

pytestmark = pytest.mark.slow


@contextmanager
def criterion(name, budget_s=None):
    """Record PASS/FAIL for ``name``; over-budget runtime is a failure."""
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        if isinstance(exc, pytest.skip.Exception):
            conftest.ACCEPTANCE_RESULTS.append((name, None, str(exc)))
        else:
            conftest.ACCEPTANCE_RESULTS.append((name, False, f"{type(exc).__name__}: {exc}"[:200]))
        raise
    elapsed = time.perf_counter() - t0
    ok = budget_s is None or elapsed < budget_s
    info = " ".join(f"{k}={v}" for k, v in detail.items())
    limit = f" (limit {budget_s:.0f}s)" if budget_s else ""
    conftest.ACCEPTANCE_RESULTS.append((name, ok, f"{elapsed:.1f}s{limit} {info}".strip()))
    assert ok, f"{name} took {elapsed:.1f}s, budget {budget_s}s"


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_simulator_rules():
    with criterion("simulator rules", 5) as d:
        test_sim.test_grill_cooks_exactly_sixty_ticks_after_placement()
        test_sim.test_sink_cleans_on_exactly_third_rinse()
        test_sim.test_board_chops_on_exactly_second_chop()
        test_sim.test_delivery_in_order()
        test_sim.test_score_delivery_cases()
        for name in ("open", "forced"):
            for seed in range(50):
                s = init_state(load_layout(name), seed)
                assert s.orders == (ItemKind.STEAK_DISH, ItemKind.STEAK_ONION_DISH)
        rewards = set()
        for seed in range(5):
            for _, _, after, r, _ in test_sim._random_run(load_layout("open"), seed, steps=300):
                assert len(after.orders) == 2
                rewards.add(r)
        assert rewards <= {0, 20, 100}
        d["checks"] = "grill/sink/board/delivery/orders"


def test_measure_oracle():
    with criterion("measure oracle (10,000 logs)", 60) as d:
        rng = random.Random(7)
        for _ in range(10_000):
            log = fuzz_log(rng)
            m = agree(log)
            assert 0 <= m.percent_contribution <= 0.5
            assert 0.25 <= m.specialization <= 1
            s = compute_measures(swap_agents(log))
            assert s.workload_diffs == tuple(-x for x in m.workload_diffs)
            assert (s.fitness, s.avg_action_delay, s.percent_contribution, s.specialization) == (
                m.fitness, m.avg_action_delay, m.percent_contribution, m.specialization)
        d["logs"] = 10_000


def test_planner_optimality():
    with criterion("planner optimality (500 layouts)", 30) as d:
        rng = random.Random(2024)
        outcomes = [check_one(rng) for _ in range(500)]
        d["reachable"] = outcomes.count("ok")
        d["unreachable"] = len(outcomes) - outcomes.count("ok")
        assert outcomes.count("ok") > 0


def test_archive_semantics():
    with criterion("archive semantics") as d:
        measures = ("a", "b", "c")
        cfg = ArchiveConfig.uniform(measures, -8, 8, 17)
        for seed in range(200):
            rng = random.Random(seed)
            stream = [Elite((f"p{i}", f"q{i}"), float(rng.choice([0, 20, 100, 120, 200])),
                            {m: rng.randint(-10, 10) for m in measures}) for i in range(200)]
            naive = NaiveArchive([(m, -8, 8, 17) for m in measures])
            for e in stream:
                naive.add(e.measures, e.objective, e.prompts)
            archive = replay_insertions(cfg, stream)
            assert {c: (e.objective, e.prompts) for c, e in archive} == naive.cells
        worst = 0.0
        for seed in range(200):
            rng = random.Random(seed)
            two = Archive(ArchiveConfig.uniform(("a", "b"), -8, 8, 17))
            for _ in range(100):
                two.insert(Elite(("x", "y"), rng.random() * 100, {"a": rng.uniform(-9, 9), "b": rng.uniform(-9, 9)}))
            assert len(two) <= 100
            worst = max(worst, two.coverage)
        d["max_coverage"] = f"{worst:.3f}<={100 / 289:.3f}"


def test_determinism_and_resume(tmp_path):
    cfg = QDConfig(n_iter=50, batch_size=2, n_repeat=4, horizon=100, seed=11)
    with criterion("determinism and kill/resume", 600) as d:
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        run_planqd(cfg, a)
        run_planqd(cfg, b)
        assert _files(a) == _files(b)
        run_planqd(cfg, c, stop_after=25)
        assert json.loads((c / "archive.json").read_text())["iterations_done"] == 25
        run_planqd(cfg, c)
        assert _files(a) == _files(c)
        d["files"] = len(_files(a))


def _qd_pair_coverage(records, qd_measures):
    ps = PointSet()
    for r in records:
        if r["status"] == "ok":
            ps.add(r["measures"])
    return float(np.mean([coverage(ps, Projection.of(x, y)) for x, y in itertools.combinations(qd_measures, 2)]))


def test_directed_search_beats_random():
    with criterion("directed search beats random mutation", 1800) as d:
        for layout in ("open", "forced"):
            wins, margins = 0, []
            for seed in range(5):
                cfg = QDConfig(layout=layout, seed=seed, save_logs=False)
                cov = {}
                for name, fn in (("planqd", run_planqd), ("random", run_random_mutation)):
                    recs = []
                    fn(cfg, on_record=recs.append)
                    cov[name] = _qd_pair_coverage(recs, cfg.qd_measures)
                wins += cov["planqd"] > cov["random"]
                margins.append(round(cov["planqd"] - cov["random"], 3))
            d[layout] = f"{wins}/5{margins}"
            assert wins >= 4, f"{layout}: PLAN-QD ahead in only {wins}/5 seeds, margins {margins}"


def _point(**kw):
    m = {c: 0.0 for c in COLUMNS}
    m["specialization"] = 0.25
    m.update(kw)
    return m


def test_analysis_arithmetic():
    with criterion("analysis arithmetic") as d:
        rng = random.Random(0)
        ps = PointSet()
        for _ in range(50):
            ps.add(_point(fitness=rng.choice([0, 100, 200]), **{w: rng.randint(-8, 8) for w in WORKLOAD_IDS}))
        sizes = pairwise_coverage_report({"run": ps}).group_sizes()
        assert sum(sizes.values()) == 66 and sizes == {"qd": 3, "non_qd": 36, "mixed": 27}
        with_comm = [_point(fitness=f, specialization=0.5) for f in (120.0, 154.4)]
        without = [_point(fitness=f, specialization=0.5) for f in (90.0, 110.0)]
        trend = format_percent(trend_table(with_comm, without)["fitness"])
        assert trend == "+37.2%"
        p = proportion_test(16, 16, 0.5)
        assert p < 0.001
        d.update(groups="3/36/27", fitness_trend=trend, p16=f"{p:.1e}")


@pytest.mark.live
def test_live_backend_smoke():
    with criterion("live backend smoke test", None) as d:
        if not os.environ.get("KITCHENQD_BACKEND_URL"):
            pytest.skip("KITCHENQD_BACKEND_URL is unset")
        backend = HTTPBackend()
        log = run_episode(load_layout("open"), ("You are always focused on the objective.",) * 2, backend,
                          EpisodeConfig(horizon=100), seed=0)
        per_agent = [sum(c.agent == i and c.template != "WAIT" for c in log.completed) for i in (0, 1)]
        rate = log.n_fallbacks / max(1, len(log.queries))
        d.update(completed=per_agent, fallback_rate=f"{rate:.2f}")
        assert min(per_agent) >= 1 and rate < 0.5
