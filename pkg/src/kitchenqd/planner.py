"""Low-level planning: high-level action -> standing goal -> grid moves.

Paths are breadth-first (unit step cost) and recomputed every tick with the
other agent treated as a static obstacle. Ties are broken deterministically:
goal candidates in row-major order, moves in N, S, E, W order.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol, Sequence

from .sim.layout import Cell, Layout
from .sim.state import MOVES, Action, WorldState

UNSTICK_CHOICES = (Action.NORTH, Action.SOUTH, Action.EAST, Action.WEST, Action.STAY)


class Unreachable(RuntimeError):
    pass


class Targetable(Protocol):
    def stations(self, state: WorldState) -> Sequence[Cell]: ...


@dataclass(frozen=True)
class Goal:
    target: Cell
    facing: str
    station: Cell
    interact: bool = True


@dataclass
class PlanState:
    goal: Optional[Goal] = None
    queued: tuple[Action, ...] = ()
    idle: int = 0


def bfs_distances(layout: Layout, start: Cell, blocked: Iterable[Cell] = ()) -> dict[Cell, int]:
    """Shortest 4-connected floor distances from ``start``."""
    block = set(blocked)
    dist = {start: 0}
    queue = deque([start])
    nbrs = layout.floor_neighbors
    while queue:
        cur = queue.popleft()
        d = dist[cur] + 1
        for _, nxt in nbrs[cur]:
            if nxt not in dist and nxt not in block:
                dist[nxt] = d
                queue.append(nxt)
    return dist


def layout_distances(layout: Layout, start: Cell) -> dict[Cell, int]:
    """``bfs_distances`` without obstacles, memoized on the layout."""
    cache = layout.distance_cache
    if start not in cache:
        cache[start] = bfs_distances(layout, start)
    return cache[start]


def station_distances(layout: Layout, start: Cell) -> dict[Cell, Optional[int]]:
    """Walking distance to stand beside each non-floor tile (None if unreachable)."""
    dist = layout_distances(layout, start)
    out = {}
    for station, spots in layout.station_access.items():
        ds = [dist[s] for s, _ in spots if s in dist]
        out[station] = min(ds) if ds else None
    return out


def goal_for_action(layout: Layout, state: WorldState, agent_id: int, hla: Targetable) -> Goal:
    """Nearest floor cell beside a station that satisfies ``hla``.

    Distances ignore the other agent so the goal stays stable while it moves
    around; ``plan_path`` handles the blocking.
    """
    stations = hla.stations(state)
    dist = layout_distances(layout, state.agents[agent_id].position)
    best = None
    for station in stations:
        for stand, facing in layout.station_access.get(station, ()):
            if stand in dist:
                key = (dist[stand], station, stand)
                if best is None or key < best[0]:
                    best = (key, Goal(stand, facing, station))
    if best is None:
        raise Unreachable(f"no reachable cell beside {list(stations)}")
    return best[1]


def plan_path(layout: Layout, state: WorldState, agent_id: int, goal: Goal) -> list[Action]:
    """Moves to ``goal.target``, a reorienting move if needed, then Interact."""
    me = state.agents[agent_id]
    other = state.agents[1 - agent_id].position
    start = me.position
    if goal.target == other:
        raise Unreachable("the other agent stands on the goal")

    parent: dict[Cell, Optional[tuple[Cell, str]]] = {start: None}
    queue = deque([start])
    nbrs = layout.floor_neighbors
    while queue and goal.target not in parent:
        cur = queue.popleft()
        for d, nxt in nbrs[cur]:
            if nxt not in parent and nxt != other:
                parent[nxt] = (cur, d)
                queue.append(nxt)
    if goal.target not in parent:
        raise Unreachable("no path to the goal this tick")

    moves: list[str] = []
    cur = goal.target
    while parent[cur] is not None:
        prev, d = parent[cur]
        moves.append(d)
        cur = prev
    moves.reverse()

    orientation = moves[-1] if moves else me.orientation
    plan = [Action(d) for d in moves]
    if orientation != goal.facing:
        plan.append(Action(goal.facing))
    if goal.interact:
        plan.append(Action.INTERACT)
    return plan


def should_unstick(moved: Sequence[bool], pursuing: Sequence[bool]) -> bool:
    """True when no agent moved last tick and every agent was trying to."""
    return not any(moved) and all(pursuing)


def unstick(stuck: Sequence[bool], rng: random.Random) -> list[Optional[Action]]:
    """A random movement (or Stay) for each stuck agent, None for the rest."""
    return [rng.choice(UNSTICK_CHOICES) if s else None for s in stuck]


__all__ = [
    "Goal", "MOVES", "PlanState", "UNSTICK_CHOICES", "Unreachable", "bfs_distances",
    "goal_for_action", "layout_distances", "plan_path", "should_unstick", "station_distances", "unstick",
]
