"""Objective and behavioural measures computed from an episode log.

All functions are pure in the log. Player 1 is agent 0, player 2 is agent 1.

Workload diffs count simulator events (player 1 count minus player 2 count):

==========================  ==============================================
measure id                  event
==========================  ==============================================
diff_onions_picked          pickup at the onion dispenser
diff_onions_on_board        place on a chopping board
diff_onions_chopped         the chop that finishes an onion (2nd chop)
diff_meat_picked            pickup at the meat dispenser
diff_meat_on_grill          place on a grill
diff_dirty_plates_picked    pickup at the dirty plate dispenser
diff_clean_plates_picked    pickup of a clean plate from a sink
diff_plates_in_sink         place in a sink
diff_dishes_served          deliver
==========================  ==============================================
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .agents.actions import ACTION_GROUPS, action_group
from .episode_log import EpisodeLog
from .sim.layout import TileKind
from .sim.state import CHOPS_TO_CUT, Event, EventKind

WORKLOAD_IDS = (
    "diff_onions_picked",
    "diff_onions_on_board",
    "diff_onions_chopped",
    "diff_meat_picked",
    "diff_meat_on_grill",
    "diff_dirty_plates_picked",
    "diff_clean_plates_picked",
    "diff_plates_in_sink",
    "diff_dishes_served",
)
TEAMWORK_IDS = ("avg_action_delay", "percent_contribution", "specialization")
# The 12 behavioural measures, in column order; fitness is the objective.
MEASURE_IDS = WORKLOAD_IDS + TEAMWORK_IDS
COLUMNS = MEASURE_IDS + ("fitness",)

_WORKLOAD_EVENTS = (
    (EventKind.PICKUP, TileKind.ONION_DISPENSER),
    (EventKind.PLACE, TileKind.CHOPPING_BOARD),
    (EventKind.CHOP, TileKind.CHOPPING_BOARD),
    (EventKind.PICKUP, TileKind.MEAT_DISPENSER),
    (EventKind.PLACE, TileKind.GRILL),
    (EventKind.PICKUP, TileKind.DIRTY_PLATE_DISPENSER),
    (EventKind.PICKUP, TileKind.SINK),
    (EventKind.PLACE, TileKind.SINK),
    (EventKind.DELIVER, TileKind.DELIVERY),
)

# Kinds produced by a successful Interact; movement events are excluded.
_INTERACT_KINDS = frozenset(EventKind) - {EventKind.MOVE, EventKind.COLLIDE}


@dataclass(frozen=True)
class MeasureVector:
    fitness: float
    avg_action_delay: float
    percent_contribution: float
    specialization: float
    workload_diffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.workload_diffs) != len(WORKLOAD_IDS):
            raise ValueError(f"expected {len(WORKLOAD_IDS)} workload diffs")

    def as_dict(self) -> dict[str, float]:
        out: dict[str, float] = dict(zip(WORKLOAD_IDS, self.workload_diffs))
        out["avg_action_delay"] = self.avg_action_delay
        out["percent_contribution"] = self.percent_contribution
        out["specialization"] = self.specialization
        out["fitness"] = self.fitness
        return out

    def row(self) -> list[float]:
        d = self.as_dict()
        return [d[c] for c in COLUMNS]

    def __getitem__(self, measure_id: str) -> float:
        return self.as_dict()[measure_id]

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> MeasureVector:
        return cls(
            fitness=d["fitness"],
            avg_action_delay=d["avg_action_delay"],
            percent_contribution=d["percent_contribution"],
            specialization=d["specialization"],
            workload_diffs=tuple(d[k] for k in WORKLOAD_IDS),
        )

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def to_csv(vectors: Iterable[MeasureVector]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for v in vectors:
        w.writerow(v.row())
    return buf.getvalue()


def from_csv(text: str) -> list[MeasureVector]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        d = {k: float(r[k]) for k in COLUMNS}
        d.update({k: int(float(r[k])) for k in WORKLOAD_IDS})
        out.append(MeasureVector.from_dict(d))
    return out


def fitness(log: EpisodeLog, gamma: float = 1.0) -> float:
    if gamma == 1.0:
        return float(sum(log.rewards))
    return float(sum(r * gamma ** t for t, r in enumerate(log.rewards) if r))


def _interact_times(events: Sequence[Event]) -> list[int]:
    return sorted(e.t for e in events if e.kind in _INTERACT_KINDS)


def avg_action_delay(log: EpisodeLog) -> float:
    """Mean gap between consecutive successful interactions by either agent."""
    ts = _interact_times(log.events)
    if len(ts) < 2:
        return float(log.horizon)
    return (ts[-1] - ts[0]) / (len(ts) - 1)


def dish_contributions(log: EpisodeLog) -> list[tuple[int, int]]:
    """(n_P1, n_P2) completed high-level actions per delivered dish."""
    out = []
    for e in log.events:
        if e.kind is not EventKind.DELIVER:
            continue
        lineage = set(e.lineage) or ({e.item_uid} if e.item_uid is not None else set())
        counts = [0, 0]
        for c in log.completed:
            if c.item_uid is not None and c.item_uid in lineage:
                counts[c.agent] += 1
        out.append((counts[0], counts[1]))
    return out


def percent_contribution(log: EpisodeLog) -> float:
    shares = []
    for n1, n2 in dish_contributions(log):
        total = n1 + n2
        shares.append(min(n1, n2) / total if total else 0.0)
    return sum(shares) / len(shares) if shares else 0.0


def group_counts(log: EpisodeLog, agent: int) -> dict[str, int]:
    counts = dict.fromkeys(ACTION_GROUPS, 0)
    for c in log.completed:
        if c.agent != agent:
            continue
        g = action_group(c.template, c.item)
        if g is not None:
            counts[g] += 1
    return counts


def specialization(log: EpisodeLog) -> float:
    per_player = []
    for agent in (0, 1):
        counts = group_counts(log, agent)
        total = sum(counts.values())
        per_player.append(max(counts.values()) / total if total else 0.25)
    return sum(per_player) / 2


def _workload_index(e: Event) -> Optional[int]:
    for i, (kind, tile) in enumerate(_WORKLOAD_EVENTS):
        if e.kind is kind and e.tile is tile:
            if kind is EventKind.CHOP and e.progress != CHOPS_TO_CUT:
                return None
            return i
    return None


def workload_counts(log: EpisodeLog) -> tuple[tuple[int, ...], tuple[int, ...]]:
    counts = [[0] * len(WORKLOAD_IDS), [0] * len(WORKLOAD_IDS)]
    for e in log.events:
        i = _workload_index(e)
        if i is not None:
            counts[e.agent][i] += 1
    return tuple(counts[0]), tuple(counts[1])


def workload_diffs(log: EpisodeLog) -> tuple[int, ...]:
    p1, p2 = workload_counts(log)
    return tuple(a - b for a, b in zip(p1, p2))


def compute_measures(log: EpisodeLog, gamma: float = 1.0) -> MeasureVector:
    return MeasureVector(
        fitness=fitness(log, gamma),
        avg_action_delay=avg_action_delay(log),
        percent_contribution=percent_contribution(log),
        specialization=specialization(log),
        workload_diffs=workload_diffs(log),
    )
