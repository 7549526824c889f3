"""The directed prompt search loop, the random-personality baseline, and evaluation.

A run directory holds:

* ``config.json``: the resolved run configuration,
* ``archive.json``: archive checkpoint written after every completed iteration,
* ``evaluations.jsonl``: one record per evaluated prompt list,
* ``logs/``: episode logs (``e<eval>_r<repeat>.jsonl``), when enabled.

Checkpoints only happen at iteration boundaries; a resumed run drops any
records from a partially finished iteration and redoes it. With seeded
backends a resumed run ends identical to an uninterrupted one.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
import yaml

from ..agents.backends import BackendFailure, HTTPBackend, LLMBackend, SamplingParams, ScriptedBackend, stable_seed
from ..agents.episode import EpisodeConfig, run_episode
from ..episode_log import EpisodeLog, config_hash
from ..measures import COLUMNS, MeasureVector, compute_measures
from ..sim.layout import Layout, load_layout
from .archive import Archive, ArchiveConfig, Elite, InsertStatus, select_parent, write_json_atomic
from .mutation import (
    direction_to_instructions,
    initial_prompt,
    mutate_prompts,
    random_personalities,
    sample_direction,
)

PLANQD, RANDOM = "planqd", "random"

QD_MEASURES = ("diff_meat_on_grill", "diff_dishes_served", "diff_onions_chopped")


class EvaluationFailed(RuntimeError):
    def __init__(self, message: str, cause: BackendFailure):
        super().__init__(message)
        self.cause = cause


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class QDConfig:
    layout: str = "open"
    n_iter: int = 50
    batch_size: int = 2
    n_repeat: int = 4
    horizon: int = 500
    qd_measures: tuple[str, ...] = QD_MEASURES
    lower: float = -8.0
    upper: float = 8.0
    bins: int = 17
    seed: int = 0
    comm: bool = True
    gamma: float = 1.0
    requery_timeout: int = 5
    action_history_len: int = 2
    message_history_len: int = 2
    temperature: float = 1.1
    top_p: float = 1.0
    max_new_tokens: int = 128
    mutator_max_new_tokens: int = 256
    max_personality_words: int = 100
    mutation_attempts: int = 3
    initial_prompt: Optional[str] = None
    # "scripted" or "http"; the mutator defaults to the agent backend.
    backend: str = "scripted"
    backend_url: Optional[str] = None
    model: Optional[str] = None
    mutator_backend: Optional[str] = None
    mutator_url: Optional[str] = None
    mutator_model: Optional[str] = None
    save_logs: bool = True
    # "raise" stops the run at a failed evaluation; "skip" records it and goes on.
    on_failure: str = "raise"

    def __post_init__(self) -> None:
        if self.n_iter < 0 or self.batch_size < 1 or self.n_repeat < 1:
            raise ConfigError("n_iter >= 0, batch_size >= 1 and n_repeat >= 1 required")
        if not self.qd_measures:
            raise ConfigError("need at least one QD measure")
        unknown = [m for m in self.qd_measures if m not in COLUMNS]
        if unknown:
            raise ConfigError(f"unknown measures {unknown}")
        if self.on_failure not in ("raise", "skip"):
            raise ConfigError("on_failure must be 'raise' or 'skip'")
        if self.backend not in ("scripted", "http"):
            raise ConfigError("backend must be 'scripted' or 'http'")

    @property
    def budget(self) -> int:
        return self.n_iter * self.batch_size

    def archive_config(self) -> ArchiveConfig:
        return ArchiveConfig.uniform(self.qd_measures, self.lower, self.upper, self.bins)

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            horizon=self.horizon,
            requery_timeout=self.requery_timeout,
            action_history_len=self.action_history_len,
            message_history_len=self.message_history_len,
            comm=self.comm,
            sampling=SamplingParams(self.temperature, self.top_p, self.max_new_tokens),
        )

    def mutator_params(self) -> SamplingParams:
        return SamplingParams(self.temperature, self.top_p, self.mutator_max_new_tokens)

    def start_prompt(self) -> str:
        return self.initial_prompt or initial_prompt()

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["qd_measures"] = list(self.qd_measures)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> QDConfig:
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        d = dict(d)
        if "qd_measures" in d:
            d["qd_measures"] = tuple(d["qd_measures"])
        return cls(**d)

    def with_overrides(self, **kw: Any) -> QDConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def search_hash(self) -> str:
        """Hash of the fields that determine a run's results."""
        d = self.to_dict()
        for k in ("save_logs", "on_failure", "n_iter"):
            d.pop(k)
        return config_hash(d)


def load_config(path: str | Path) -> QDConfig:
    """Read a YAML or JSON run configuration (JSON is valid YAML)."""
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return QDConfig.from_dict(data)


def make_backends(cfg: QDConfig) -> tuple[LLMBackend, LLMBackend]:
    def build(kind: str, url: Optional[str], model: Optional[str]) -> LLMBackend:
        if kind == "scripted":
            return ScriptedBackend(cfg.seed)
        return HTTPBackend(base_url=url, model=model)

    agents = build(cfg.backend, cfg.backend_url, cfg.model)
    mut_kind = cfg.mutator_backend or cfg.backend
    if mut_kind == cfg.backend and cfg.mutator_url is None and cfg.mutator_model is None:
        return agents, agents
    return agents, build(mut_kind, cfg.mutator_url or cfg.backend_url, cfg.mutator_model or cfg.model)


@dataclass
class Evaluation:
    objective: float
    measures: dict[str, float]
    repeats: list[MeasureVector]
    logs: list[EpisodeLog]
    seeds: list[int] = field(default_factory=list)


def episode_seeds(master: int, eval_index: int, n_repeat: int) -> list[int]:
    return [stable_seed("episode", master, eval_index, r) % 2**31 for r in range(n_repeat)]


def median_measures(repeats: Sequence[MeasureVector]) -> dict[str, float]:
    """Component-wise median; the result need not match any single repeat."""
    table = np.array([v.row() for v in repeats], dtype=float)
    med = np.median(table, axis=0)
    return {c: float(x) for c, x in zip(COLUMNS, med)}


def evaluate(
    prompts: Sequence[str],
    cfg: QDConfig,
    backend: LLMBackend,
    seeds: Optional[Sequence[int]] = None,
    layout: Optional[Layout] = None,
) -> Evaluation:
    """Play ``cfg.n_repeat`` episodes and take component-wise medians."""
    layout = layout or load_layout(cfg.layout)
    seeds = list(seeds) if seeds is not None else episode_seeds(cfg.seed, 0, cfg.n_repeat)
    ecfg = cfg.episode_config()
    logs, repeats = [], []
    for s in seeds:
        try:
            log = run_episode(layout, prompts, backend, ecfg, seed=s)
        except BackendFailure as exc:
            raise EvaluationFailed(f"episode with seed {s} aborted: {exc}", exc) from exc
        logs.append(log)
        repeats.append(compute_measures(log, cfg.gamma))
    med = median_measures(repeats)
    return Evaluation(med["fitness"], med, repeats, logs, seeds)


class RunStore:
    """Files of one run directory."""

    def __init__(self, out_dir: str | Path):
        self.root = Path(out_dir)
        self.archive_path = self.root / "archive.json"
        self.evals_path = self.root / "evaluations.jsonl"
        self.config_path = self.root / "config.json"
        self.log_dir = self.root / "logs"

    def resume(self, cfg: QDConfig, algorithm: str) -> tuple[Optional[Archive], int]:
        """(archive, completed iterations) from the last checkpoint, if any."""
        self.root.mkdir(parents=True, exist_ok=True)
        if not self.archive_path.exists():
            write_json_atomic(self.config_path, {"algorithm": algorithm, **cfg.to_dict()})
            self.evals_path.write_text("")
            return None, 0
        state = json.loads(self.archive_path.read_text())
        if state.get("algorithm") != algorithm or state.get("search_hash") != cfg.search_hash():
            raise ConfigError(f"{self.root} holds a run with a different configuration")
        done = int(state["iterations_done"])
        kept = [ln for ln in self.read_evaluations_text() if json.loads(ln)["iteration"] < done]
        self.evals_path.write_text("".join(kept))
        write_json_atomic(self.config_path, {"algorithm": algorithm, **cfg.to_dict()})
        return Archive.from_dict(state), done

    def read_evaluations_text(self) -> list[str]:
        if not self.evals_path.exists():
            return []
        return [ln + "\n" for ln in self.evals_path.read_text().splitlines() if ln.strip()]

    def append(self, records: Sequence[Mapping[str, Any]]) -> None:
        with self.evals_path.open("a") as fh:
            for r in records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")

    def checkpoint(self, archive: Archive, iterations_done: int, algorithm: str, cfg: QDConfig) -> None:
        archive.save(self.archive_path, {
            "algorithm": algorithm,
            "iterations_done": iterations_done,
            "search_hash": cfg.search_hash(),
        })

    def save_logs(self, eval_index: int, logs: Sequence[EpisodeLog]) -> list[str]:
        self.log_dir.mkdir(parents=True, exist_ok=True)
        refs = []
        for r, log in enumerate(logs):
            rel = f"logs/e{eval_index:04d}_r{r}.jsonl"
            log.save(self.root / rel)
            refs.append(rel)
        return refs


def load_evaluations(run_dir: str | Path) -> list[dict[str, Any]]:
    return [json.loads(ln) for ln in RunStore(run_dir).read_evaluations_text()]


@dataclass(frozen=True)
class Candidate:
    prompts: tuple[str, ...]
    provenance: dict[str, Any]


Proposer = Callable[[Archive, int, np.random.Generator], list[Candidate]]


def _planqd_proposer(cfg: QDConfig, mutator: LLMBackend) -> Proposer:
    x0 = cfg.start_prompt()

    def propose(archive: Archive, it: int, rng: np.random.Generator) -> list[Candidate]:
        out = []
        for b in range(cfg.batch_size):
            parent_cell, parent = select_parent(archive, (x0, x0), rng)
            direction = sample_direction(rng, len(cfg.qd_measures))
            instructions = direction_to_instructions(direction, cfg.qd_measures)
            params = replace(cfg.mutator_params(), seed=stable_seed("mutate", cfg.seed, it, b))
            result = mutate_prompts(
                mutator, parent, instructions, params,
                max_words=cfg.max_personality_words, attempts=cfg.mutation_attempts,
            )
            out.append(Candidate(result.prompts, {
                "parent_cell": list(parent_cell) if parent_cell is not None else None,
                "parent_prompts": list(parent),
                "direction": list(direction),
                "instructions": [i.direction for i in instructions],
                "kept_parent": list(result.kept_parent),
            }))
        return out

    return propose


def _random_proposer(cfg: QDConfig, mutator: LLMBackend) -> Proposer:
    x0 = cfg.start_prompt()

    def propose(archive: Archive, it: int, rng: np.random.Generator) -> list[Candidate]:
        n = 2 * cfg.batch_size
        params = replace(cfg.mutator_params(), seed=stable_seed("random", cfg.seed, it))
        people = random_personalities(
            mutator, x0, n, params,
            max_words=cfg.max_personality_words, attempts=cfg.mutation_attempts,
        )
        return [
            Candidate((people[2 * b], people[2 * b + 1]), {"parent_cell": None, "batch_request": it})
            for b in range(cfg.batch_size)
        ]

    return propose


def _run(
    cfg: QDConfig,
    algorithm: str,
    proposer_factory: Callable[[QDConfig, LLMBackend], Proposer],
    out_dir: Optional[str | Path],
    agent_backend: Optional[LLMBackend],
    mutator_backend: Optional[LLMBackend],
    stop_after: Optional[int],
    on_record: Optional[Callable[[dict[str, Any]], None]],
) -> Archive:
    if agent_backend is None or mutator_backend is None:
        default_agents, default_mutator = make_backends(cfg)
        agent_backend = agent_backend or default_agents
        mutator_backend = mutator_backend or default_mutator
    layout = load_layout(cfg.layout)
    store = RunStore(out_dir) if out_dir is not None else None
    archive, start = (store.resume(cfg, algorithm) if store else (None, 0))
    archive = archive or Archive(cfg.archive_config())
    propose = proposer_factory(cfg, mutator_backend)

    for it in range(start, cfg.n_iter):
        if stop_after is not None and it >= stop_after:
            break
        rng = np.random.default_rng([cfg.seed, it])
        candidates = propose(archive, it, rng)
        records, elites = [], []
        for b, cand in enumerate(candidates):
            index = it * cfg.batch_size + b
            seeds = episode_seeds(cfg.seed, index, cfg.n_repeat)
            rec: dict[str, Any] = {
                "algorithm": algorithm, "iteration": it, "index": index,
                "prompts": list(cand.prompts), "seeds": seeds, **cand.provenance,
            }
            try:
                ev = evaluate(cand.prompts, cfg, agent_backend, seeds, layout)
            except EvaluationFailed as exc:
                rec.update(status="failed", error=str(exc))
                records.append(rec)
                if cfg.on_failure == "raise":
                    if store:
                        store.append(records)
                    raise exc.cause
                continue
            logs = store.save_logs(index, ev.logs) if (store and cfg.save_logs) else []
            rec.update(
                status="ok", objective=ev.objective, measures=ev.measures,
                repeats=[v.as_dict() for v in ev.repeats], logs=logs,
            )
            records.append(rec)
            elites.append((rec, Elite(
                prompts=cand.prompts,
                objective=ev.objective,
                measures=ev.measures,
                repeats=tuple(v.as_dict() for v in ev.repeats),
                provenance={"algorithm": algorithm, "iteration": it, "index": index, **cand.provenance},
                logs=tuple(logs),
            )))
        # Insertion happens once the whole batch is evaluated.
        for rec, elite in elites:
            status, cell = archive.insert(elite)
            rec["cell"], rec["insert"] = list(cell), status.value
        if store:
            store.append(records)
            store.checkpoint(archive, it + 1, algorithm, cfg)
        if on_record:
            for rec in records:
                on_record(rec)
    return archive


def run_planqd(
    cfg: QDConfig,
    out_dir: Optional[str | Path] = None,
    agent_backend: Optional[LLMBackend] = None,
    mutator_backend: Optional[LLMBackend] = None,
    stop_after: Optional[int] = None,
    on_record: Optional[Callable[[dict[str, Any]], None]] = None,
) -> Archive:
    """Directed search: select an elite, mutate it toward a random measure direction,
    evaluate, insert. ``stop_after`` ends the run after that many iterations
    (a resumable checkpoint, as if the process had been killed)."""
    return _run(cfg, PLANQD, _planqd_proposer, out_dir, agent_backend, mutator_backend, stop_after, on_record)


def run_random_mutation(
    cfg: QDConfig,
    out_dir: Optional[str | Path] = None,
    agent_backend: Optional[LLMBackend] = None,
    mutator_backend: Optional[LLMBackend] = None,
    stop_after: Optional[int] = None,
    on_record: Optional[Callable[[dict[str, Any]], None]] = None,
) -> Archive:
    """Baseline: every candidate is a pair of fresh random personalities derived
    from the initial prompt only."""
    return _run(cfg, RANDOM, _random_proposer, out_dir, agent_backend, mutator_backend, stop_after, on_record)


__all__ = [
    "Candidate", "ConfigError", "Evaluation", "EvaluationFailed", "InsertStatus", "PLANQD",
    "QDConfig", "QD_MEASURES", "RANDOM", "RunStore", "episode_seeds", "evaluate", "load_config",
    "load_evaluations", "make_backends", "median_measures", "run_planqd", "run_random_mutation",
]
