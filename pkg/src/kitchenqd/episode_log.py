"""Episode logs and their JSONL form.

A log file starts with one ``header`` record, followed by records tagged
``step`` (joint low-level action and reward per tick), ``event`` (simulator
events), ``query`` (raw prompt/completion pairs), ``complete`` (finished
high-level actions) and ``message``, in timestep order.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from .sim.state import Event


class MalformedLog(ValueError):
    pass


@dataclass(frozen=True)
class CompletedAction:
    t: int
    agent: int
    template: str
    text: str
    item: Optional[str] = None
    item_uid: Optional[int] = None


@dataclass(frozen=True)
class QueryRecord:
    t: int
    agent: int
    prompt: str
    response: str
    action: str
    message: Optional[str] = None
    fallback: bool = False


@dataclass(frozen=True)
class Message:
    t: int
    sender: int
    text: str


@dataclass
class EpisodeLog:
    layout_name: str
    seed: int
    horizon: int
    layout_text: str = ""
    comm: bool = True
    prompts: tuple[str, ...] = ()
    config_hash: str = ""
    actions: list[tuple[str, str]] = field(default_factory=list)
    rewards: list[int] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    completed: list[CompletedAction] = field(default_factory=list)
    queries: list[QueryRecord] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list)
    failed: bool = False
    error: str = ""

    @property
    def n_fallbacks(self) -> int:
        return sum(q.fallback for q in self.queries)

    def header(self) -> dict[str, Any]:
        return {
            "type": "header",
            "layout": self.layout_name,
            "layout_text": self.layout_text,
            "seed": self.seed,
            "horizon": self.horizon,
            "comm": self.comm,
            "prompts": list(self.prompts),
            "config_hash": self.config_hash,
            "failed": self.failed,
            "error": self.error,
        }

    def records(self) -> Iterable[dict[str, Any]]:
        yield self.header()
        by_t: dict[int, list[dict[str, Any]]] = {}

        def put(t: int, rec: dict[str, Any]) -> None:
            by_t.setdefault(t, []).append(rec)

        for q in self.queries:
            put(q.t, {"type": "query", **asdict(q)})
        for m in self.messages:
            put(m.t, {"type": "message", **asdict(m)})
        for t, (acts, r) in enumerate(zip(self.actions, self.rewards)):
            put(t, {"type": "step", "t": t, "actions": list(acts), "reward": r})
        for e in self.events:
            put(e.t, {"type": "event", **e.to_dict()})
        for c in self.completed:
            put(c.t, {"type": "complete", **asdict(c)})
        for t in sorted(by_t):
            yield from by_t[t]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> EpisodeLog:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise MalformedLog("empty log")
        try:
            recs = [json.loads(ln) for ln in lines]
        except json.JSONDecodeError as exc:
            raise MalformedLog(str(exc)) from exc
        head = recs[0]
        if head.get("type") != "header":
            raise MalformedLog("first record must be the header")
        try:
            log = cls(
                layout_name=head["layout"],
                seed=head["seed"],
                horizon=head["horizon"],
                layout_text=head.get("layout_text", ""),
                comm=head.get("comm", True),
                prompts=tuple(head.get("prompts", ())),
                config_hash=head.get("config_hash", ""),
                failed=head.get("failed", False),
                error=head.get("error", ""),
            )
            steps = []
            for rec in recs[1:]:
                kind = rec.pop("type", None)
                if kind == "step":
                    steps.append((rec["t"], tuple(rec["actions"]), rec["reward"]))
                elif kind == "event":
                    log.events.append(Event.from_dict(rec))
                elif kind == "complete":
                    log.completed.append(CompletedAction(**rec))
                elif kind == "query":
                    log.queries.append(QueryRecord(**rec))
                elif kind == "message":
                    log.messages.append(Message(**rec))
                else:
                    raise MalformedLog(f"unknown record type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedLog(f"bad record: {exc}") from exc
        steps.sort(key=lambda s: s[0])
        if [s[0] for s in steps] != list(range(len(steps))):
            raise MalformedLog("step records are not contiguous")
        log.actions = [s[1] for s in steps]
        log.rewards = [s[2] for s in steps]
        return log

    @classmethod
    def load(cls, path: str | Path) -> EpisodeLog:
        return cls.from_jsonl(Path(path).read_text())


def config_hash(config: dict[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
