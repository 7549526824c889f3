"""World state and the per-timestep transition of the two-agent kitchen."""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

from .items import DISHES, Item, ItemKind, merge
from .layout import DIRECTIONS, Cell, Layout, TileKind

DEFAULT_HORIZON = 500
COOK_TIME = 60
RINSES_TO_CLEAN = 3
CHOPS_TO_CUT = 2
IN_ORDER_POINTS = 100
OUT_OF_ORDER_POINTS = 20


class EpisodeOver(RuntimeError):
    pass


class Action(str, enum.Enum):
    NORTH = "N"
    SOUTH = "S"
    EAST = "E"
    WEST = "W"
    STAY = "stay"
    INTERACT = "interact"

    @property
    def is_move(self) -> bool:
        return self.value in DIRECTIONS


MOVES = (Action.NORTH, Action.SOUTH, Action.EAST, Action.WEST)


class EventKind(str, enum.Enum):
    PICKUP = "pickup"
    PLACE = "place"
    RINSE = "rinse"
    CHOP = "chop"
    PLATE_STEAK = "plate_steak"
    GARNISH = "garnish"
    DELIVER = "deliver"
    MOVE = "move"
    COLLIDE = "collide"


@dataclass(frozen=True)
class AgentState:
    position: Cell
    orientation: str = "S"
    held: Optional[Item] = None

    def facing_cell(self) -> Cell:
        dr, dc = DIRECTIONS[self.orientation]
        return (self.position[0] + dr, self.position[1] + dc)


@dataclass(frozen=True)
class Appliance:
    """Contents of a grill, sink or chopping board.

    ``progress`` is the cook timer (grill), rinses done (sink) or chops done
    (board) for the item currently held.
    """

    item: Optional[Item] = None
    progress: int = 0


@dataclass(frozen=True)
class Event:
    t: int
    agent: int
    kind: EventKind
    cell: Optional[Cell] = None
    tile: Optional[TileKind] = None
    item: Optional[ItemKind] = None
    item_uid: Optional[int] = None
    lineage: tuple[int, ...] = ()
    progress: Optional[int] = None
    reward: int = 0

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"t": self.t, "agent": self.agent, "kind": self.kind.value}
        if self.cell is not None:
            d["cell"] = list(self.cell)
        if self.tile is not None:
            d["tile"] = self.tile.name
        if self.item is not None:
            d["item"] = self.item.name
        if self.item_uid is not None:
            d["item_uid"] = self.item_uid
        if self.lineage:
            d["lineage"] = list(self.lineage)
        if self.progress is not None:
            d["progress"] = self.progress
        if self.reward:
            d["reward"] = self.reward
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Event:
        return cls(
            t=d["t"],
            agent=d["agent"],
            kind=EventKind(d["kind"]),
            cell=tuple(d["cell"]) if "cell" in d else None,
            tile=TileKind[d["tile"]] if "tile" in d else None,
            item=ItemKind[d["item"]] if "item" in d else None,
            item_uid=d.get("item_uid"),
            lineage=tuple(d.get("lineage", ())),
            progress=d.get("progress"),
            reward=d.get("reward", 0),
        )


@dataclass
class WorldState:
    layout: Layout
    agents: tuple[AgentState, AgentState]
    appliances: dict[Cell, Appliance]
    counters: dict[Cell, Optional[Item]]
    orders: tuple[ItemKind, ItemKind]
    timestep: int = 0
    seed: int = 0
    # Counter-based order generator: draw k uses a stream keyed by (seed, k).
    order_draws: int = 0
    next_uid: int = 0
    horizon: int = DEFAULT_HORIZON
    # Grills whose meat was placed during the step that produced this state.
    fresh_grills: frozenset[Cell] = field(default_factory=frozenset)

    def clone(self) -> WorldState:
        return replace(self, appliances=dict(self.appliances), counters=dict(self.counters))

    def order_rng(self) -> random.Random:
        return random.Random(f"orders:{self.seed}:{self.order_draws}")

    def new_item(self, kind: ItemKind) -> Item:
        item = Item.new(kind, self.next_uid)
        self.next_uid += 1
        return item

    def items(self) -> list[Item]:
        held = [a.held for a in self.agents if a.held is not None]
        on_counters = [i for i in self.counters.values() if i is not None]
        in_appliances = [a.item for a in self.appliances.values() if a.item is not None]
        return held + on_counters + in_appliances

    @property
    def done(self) -> bool:
        return self.timestep >= self.horizon


def init_state(layout: Layout, seed: int, horizon: int = DEFAULT_HORIZON) -> WorldState:
    appliances = {}
    for kind in (TileKind.GRILL, TileKind.SINK, TileKind.CHOPPING_BOARD):
        for cell in layout.tiles(kind):
            appliances[cell] = Appliance()
    counters: dict[Cell, Optional[Item]] = {}
    for kind in (TileKind.GENERAL_COUNTER, TileKind.SHARED_COUNTER):
        for cell in layout.tiles(kind):
            counters[cell] = None
    return WorldState(
        layout=layout,
        agents=tuple(AgentState(position=s) for s in layout.spawns),
        appliances=appliances,
        counters=counters,
        orders=(ItemKind.STEAK_DISH, ItemKind.STEAK_ONION_DISH),
        seed=seed,
        horizon=horizon,
    )


def score_delivery(
    orders: Sequence[ItemKind], dish: ItemKind, rng: random.Random
) -> tuple[int, tuple[ItemKind, ItemKind]]:
    """Score a delivered dish against the two visible orders.

    The head order pays 100, the second pays 20; a dish matching neither
    pays nothing and leaves the orders alone. Any fulfilled order is
    replaced by a uniform draw appended at the back.
    """
    if dish == orders[0]:
        reward, remaining = IN_ORDER_POINTS, orders[1]
    elif dish == orders[1]:
        reward, remaining = OUT_OF_ORDER_POINTS, orders[0]
    else:
        return 0, (orders[0], orders[1])
    return reward, (remaining, rng.choice(DISHES))


def resolve_movement(
    state: WorldState, actions: Sequence[Action]
) -> tuple[tuple[AgentState, AgentState], list[Event]]:
    layout = state.layout
    agents = list(state.agents)
    targets: list[Optional[Cell]] = [None, None]
    for i, (agent, act) in enumerate(zip(agents, actions)):
        if not act.is_move:
            continue
        dr, dc = DIRECTIONS[act.value]
        nxt = (agent.position[0] + dr, agent.position[1] + dc)
        agents[i] = replace(agent, orientation=act.value)
        if layout.is_floor(nxt):
            targets[i] = nxt

    events = []
    same_target = targets[0] is not None and targets[0] == targets[1]
    for i in (0, 1):
        tgt = targets[i]
        if tgt is None:
            continue
        other = state.agents[1 - i].position
        if same_target or tgt == other:
            events.append(Event(state.timestep, i, EventKind.COLLIDE, cell=tgt))
            continue
        agents[i] = replace(agents[i], position=tgt)
        events.append(Event(state.timestep, i, EventKind.MOVE, cell=tgt))
    return (agents[0], agents[1]), events


_DISPENSED = {
    TileKind.MEAT_DISPENSER: ItemKind.RAW_MEAT,
    TileKind.ONION_DISPENSER: ItemKind.RAW_ONION,
    TileKind.DIRTY_PLATE_DISPENSER: ItemKind.DIRTY_PLATE,
}


def _interact(state: WorldState, agent_id: int) -> tuple[list[Event], int]:
    """Apply one agent's Interact to ``state`` in place."""
    agent = state.agents[agent_id]
    cell = agent.facing_cell()
    tile = state.layout.tile(cell)
    held = agent.held
    t = state.timestep

    def ev(kind: EventKind, item: Optional[Item], **kw: Any) -> Event:
        return Event(
            t, agent_id, kind, cell=cell, tile=tile,
            item=item.kind if item else None, item_uid=item.uid if item else None, **kw,
        )

    def set_held(item: Optional[Item]) -> None:
        agents = list(state.agents)
        agents[agent_id] = replace(agent, held=item)
        state.agents = (agents[0], agents[1])

    if tile is None or tile is TileKind.FLOOR:
        return [], 0

    if tile.is_dispenser:
        if held is None:
            item = state.new_item(_DISPENSED[tile])
            set_held(item)
            return [ev(EventKind.PICKUP, item)], 0
        return [], 0

    if tile.is_counter:
        content = state.counters[cell]
        if held is None and content is not None:
            state.counters[cell] = None
            set_held(content)
            return [ev(EventKind.PICKUP, content)], 0
        if held is not None and content is None:
            state.counters[cell] = held
            set_held(None)
            return [ev(EventKind.PLACE, held)], 0
        return [], 0

    if tile is TileKind.DELIVERY:
        if held is not None and held.kind.is_dish:
            reward, orders = score_delivery(state.orders, held.kind, state.order_rng())
            if orders != state.orders:
                state.order_draws += 1
            state.orders = orders
            set_held(None)
            return [ev(EventKind.DELIVER, held, lineage=tuple(sorted(held.lineage)), reward=reward)], reward
        return [], 0

    app = state.appliances[cell]
    content = app.item
    if tile is TileKind.GRILL:
        if content is None and held is not None and held.kind is ItemKind.RAW_MEAT:
            state.appliances[cell] = Appliance(held, 0)
            state.fresh_grills = state.fresh_grills | {cell}
            set_held(None)
            return [ev(EventKind.PLACE, held, progress=0)], 0
        if (content is not None and content.kind is ItemKind.COOKED_MEAT
                and held is not None and held.kind is ItemKind.CLEAN_PLATE):
            dish = merge(held, content, ItemKind.STEAK_DISH, state.next_uid)
            state.next_uid += 1
            state.appliances[cell] = Appliance()
            set_held(dish)
            return [ev(EventKind.PLATE_STEAK, dish)], 0
        return [], 0

    if tile is TileKind.SINK:
        if content is None and held is not None and held.kind is ItemKind.DIRTY_PLATE:
            state.appliances[cell] = Appliance(held, 0)
            set_held(None)
            return [ev(EventKind.PLACE, held, progress=0)], 0
        if content is not None and held is None:
            if app.progress < RINSES_TO_CLEAN:
                rinses = app.progress + 1
                item = content.becomes(ItemKind.CLEAN_PLATE) if rinses == RINSES_TO_CLEAN else content
                state.appliances[cell] = Appliance(item, rinses)
                return [ev(EventKind.RINSE, item, progress=rinses)], 0
            state.appliances[cell] = Appliance()
            set_held(content)
            return [ev(EventKind.PICKUP, content)], 0
        return [], 0

    if tile is TileKind.CHOPPING_BOARD:
        if content is None and held is not None and held.kind is ItemKind.RAW_ONION:
            state.appliances[cell] = Appliance(held, 0)
            set_held(None)
            return [ev(EventKind.PLACE, held, progress=0)], 0
        if content is not None and held is None and app.progress < CHOPS_TO_CUT:
            chops = app.progress + 1
            item = content.becomes(ItemKind.CHOPPED_ONION) if chops == CHOPS_TO_CUT else content
            state.appliances[cell] = Appliance(item, chops)
            return [ev(EventKind.CHOP, item, progress=chops)], 0
        if (content is not None and content.kind is ItemKind.CHOPPED_ONION
                and held is not None and held.kind is ItemKind.STEAK_DISH):
            dish = merge(held, content, ItemKind.STEAK_ONION_DISH, state.next_uid)
            state.next_uid += 1
            state.appliances[cell] = Appliance()
            set_held(dish)
            return [ev(EventKind.GARNISH, dish)], 0
        return [], 0

    return [], 0


def apply_interact(state: WorldState, agent_id: int) -> tuple[WorldState, list[Event]]:
    """Pure wrapper: the interact of one agent applied to a copy of ``state``."""
    new = state.clone()
    events, _ = _interact(new, agent_id)
    return new, events


def step(
    state: WorldState, actions: Sequence[Action | str]
) -> tuple[WorldState, int, list[Event]]:
    """Advance one timestep. Returns the new state; ``state`` is untouched.

    Order within a step: movement, then interacts (agent 0 first), then the
    grill timers. Meat placed during this step starts counting on the next.
    """
    if state.timestep >= state.horizon:
        raise EpisodeOver(f"timestep {state.timestep} reached horizon {state.horizon}")
    acts = [Action(a) for a in actions]
    if len(acts) != 2:
        raise ValueError("exactly one action per agent")

    new = state.clone()
    new.fresh_grills = frozenset()
    agents, events = resolve_movement(state, acts)
    new.agents = agents

    reward = 0
    for i, act in enumerate(acts):
        if act is Action.INTERACT:
            evs, r = _interact(new, i)
            events.extend(evs)
            reward += r

    for cell in new.layout.tiles(TileKind.GRILL):
        app = new.appliances[cell]
        if (app.item is not None and app.item.kind is ItemKind.RAW_MEAT
                and cell not in new.fresh_grills):
            timer = min(app.progress + 1, COOK_TIME)
            item = app.item.becomes(ItemKind.COOKED_MEAT) if timer == COOK_TIME else app.item
            new.appliances[cell] = Appliance(item, timer)

    new.timestep += 1
    return new, reward, events
