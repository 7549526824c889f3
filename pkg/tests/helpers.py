"""Small builders shared by the tests."""
from __future__ import annotations

import random

from kitchenqd.episode_log import CompletedAction, EpisodeLog
from kitchenqd.sim import Action, Appliance, Item, ItemKind, TileKind, WorldState, init_state, parse_layout
from kitchenqd.sim.state import Event, EventKind

# A tiny kitchen: every station sits in the top wall, agents start below.
MINI = """\
XMOPGWBTX
X.1...2.X
XXXXSXXXX
"""


def mini_layout():
    return parse_layout(MINI, name="mini")


def place(state: WorldState, agent: int, cell, facing: str, held: ItemKind | None = None) -> WorldState:
    from dataclasses import replace

    agents = list(state.agents)
    item = state.new_item(held) if held else None
    agents[agent] = replace(agents[agent], position=cell, orientation=facing, held=item)
    state.agents = (agents[0], agents[1])
    return state


def put_in_appliance(state: WorldState, cell, kind: ItemKind, progress: int = 0) -> WorldState:
    state.appliances[cell] = Appliance(state.new_item(kind), progress)
    return state


def stays(n: int) -> list[tuple[Action, Action]]:
    return [(Action.STAY, Action.STAY)] * n


# --- fuzzed logs for the measure oracle ------------------------------------

_WORK_KINDS = [
    (EventKind.PICKUP, TileKind.ONION_DISPENSER, ItemKind.RAW_ONION),
    (EventKind.PICKUP, TileKind.MEAT_DISPENSER, ItemKind.RAW_MEAT),
    (EventKind.PICKUP, TileKind.DIRTY_PLATE_DISPENSER, ItemKind.DIRTY_PLATE),
    (EventKind.PICKUP, TileKind.SINK, ItemKind.CLEAN_PLATE),
    (EventKind.PICKUP, TileKind.GENERAL_COUNTER, ItemKind.RAW_MEAT),
    (EventKind.PLACE, TileKind.CHOPPING_BOARD, ItemKind.RAW_ONION),
    (EventKind.PLACE, TileKind.GRILL, ItemKind.RAW_MEAT),
    (EventKind.PLACE, TileKind.SINK, ItemKind.DIRTY_PLATE),
    (EventKind.PLACE, TileKind.SHARED_COUNTER, ItemKind.CLEAN_PLATE),
    (EventKind.RINSE, TileKind.SINK, ItemKind.DIRTY_PLATE),
    (EventKind.CHOP, TileKind.CHOPPING_BOARD, ItemKind.RAW_ONION),
    (EventKind.PLATE_STEAK, TileKind.GRILL, ItemKind.STEAK_DISH),
    (EventKind.GARNISH, TileKind.CHOPPING_BOARD, ItemKind.STEAK_ONION_DISH),
    (EventKind.DELIVER, TileKind.DELIVERY, ItemKind.STEAK_DISH),
    (EventKind.MOVE, None, None),
    (EventKind.COLLIDE, None, None),
]

_TEMPLATES = [
    ("PICK_MEAT", None), ("PICK_ONION", None), ("PICK_DIRTY_PLATE", None), ("PLACE_GRILL", None),
    ("PLACE_BOARD", None), ("PLACE_SINK", None), ("RINSE", None), ("CHOP", None),
    ("PICK_CLEAN_PLATE", None), ("PLATE_STEAK", None), ("GARNISH", None),
    ("DELIVER_STEAK", None), ("DELIVER_STEAK_ONION", None), ("WAIT", None),
    ("PICKUP_COUNTER", "RAW_MEAT"), ("PLACE_GENERAL", "CLEAN_PLATE"), ("PLACE_SHARED", "STEAK_DISH"),
    ("PICKUP_COUNTER", "CHOPPED_ONION"), ("PLACE_SHARED", "DIRTY_PLATE"),
]


def fuzz_log(rng: random.Random, max_events: int = 20, horizon: int = 500) -> EpisodeLog:
    n_events = rng.randint(0, max_events)
    n_uids = rng.randint(1, 12)
    events = []
    for _ in range(n_events):
        kind, tile, item = rng.choice(_WORK_KINDS)
        t = rng.randrange(horizon)
        agent = rng.randrange(2)
        uid = rng.randrange(n_uids) if item else None
        lineage = ()
        if kind is EventKind.DELIVER:
            lineage = tuple(sorted(rng.sample(range(n_uids), rng.randint(1, n_uids))))
        progress = rng.randint(0, 3) if kind in (EventKind.CHOP, EventKind.RINSE) else None
        reward = rng.choice((0, 20, 100)) if kind is EventKind.DELIVER else 0
        events.append(Event(t, agent, kind, cell=(0, 0) if tile else (1, 1), tile=tile, item=item,
                            item_uid=uid, lineage=lineage, progress=progress, reward=reward))
    events.sort(key=lambda e: e.t)
    completed = []
    for _ in range(rng.randint(0, max_events)):
        template, item = rng.choice(_TEMPLATES)
        uid = None if template == "WAIT" else rng.randrange(n_uids)
        completed.append(CompletedAction(rng.randrange(horizon), rng.randrange(2), template, template.lower(), item, uid))
    completed.sort(key=lambda c: c.t)
    rewards = [0] * horizon
    for e in events:
        rewards[e.t] += e.reward
    return EpisodeLog("fuzz", seed=0, horizon=horizon, rewards=rewards, events=events, completed=completed)


def swap_agents(log: EpisodeLog) -> EpisodeLog:
    from dataclasses import replace

    return EpisodeLog(
        log.layout_name, log.seed, log.horizon, rewards=list(log.rewards),
        events=[replace(e, agent=1 - e.agent) for e in log.events],
        completed=[replace(c, agent=1 - c.agent) for c in log.completed],
    )


def fresh(layout=None, seed: int = 0) -> WorldState:
    return init_state(layout or mini_layout(), seed)


__all__ = ["Item", "MINI", "fresh", "fuzz_log", "mini_layout", "place", "put_in_appliance", "stays", "swap_agents"]
