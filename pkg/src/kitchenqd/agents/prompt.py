"""Text rendering of the game state for LLM queries."""
from __future__ import annotations

from typing import Optional, Sequence

from ..episode_log import CompletedAction, Message
from ..planner import layout_distances
from ..sim.items import ItemKind
from ..sim.layout import Layout, TileKind
from ..sim.state import WorldState
from .actions import HighLevelAction

AGENT_NAMES = ("Alice", "Bob")

GENERIC_DESCRIPTION = (
    "A kitchen with a meat dispenser, an onion dispenser, a dirty plate dispenser, "
    "a grill, a sink, a chopping board and a delivery location."
)

DOMAIN_KNOWLEDGE = """\
The game has the following dishes: steak dish, steak onion dish. The agents are provided with the current and next order required to make. Ingredients for these dishes are obtained from dispensers.

Raw meat, raw onions and dirty plates come from their dispensers, which never run out. An agent can hold one item at a time.
Raw meat put on the grill becomes cooked meat (steak) after 60 timesteps.
A dirty plate put in the sink becomes a clean plate after three rinses.
A raw onion put on the chopping board becomes a chopped onion after two chops.
Counters can hold one item each. Shared counters are counters that are convenient for passing items to the other agent; all other counters are general counters.

The steak dish requires 2 items: 1 cooked meat (steak) and 1 clean plate. Use a clean plate to pick up the steak from the grill.
The steak onion dish requires 3 items: 1 cooked meat (steak), 1 chopped onion, and 1 clean plate. Add the chopped onion from the chopping board to a steak dish.
After the dish is complete, it must be delivered to a delivery location."""

OBJECTIVE = (
    "Your objective is to deliver all the dishes from the order list as quickly as possible. "
    "Delivering dishes in the correct order of the order list gives $100, and out of order gives $20."
)

SEPARATOR = "---"


def _article(kind: Optional[ItemKind]) -> str:
    if kind is None:
        return "nothing"
    name = kind.value
    return f"an {name}" if name[0] in "aeiou" else f"a {name}"


def describe_inventory(state: WorldState, names: Sequence[str] = AGENT_NAMES) -> str:
    parts = []
    for name, agent in zip(names, state.agents):
        parts.append(f"{name} is holding {_article(agent.held.kind if agent.held else None)}.")
    return " ".join(parts)


def describe_kitchen(state: WorldState) -> str:
    layout = state.layout
    labels = layout.station_labels
    lines = []
    for cell in layout.tiles(TileKind.GRILL):
        app = state.appliances[cell]
        if app.item is None:
            lines.append(f"The {labels[cell]} is empty.")
        elif app.item.kind is ItemKind.COOKED_MEAT:
            lines.append(f"The {labels[cell]} has a cooked steak ready to be picked up with a clean plate.")
        else:
            lines.append(f"The {labels[cell]} is cooking raw meat ({60 - app.progress} timesteps left).")
    for cell in layout.tiles(TileKind.SINK):
        app = state.appliances[cell]
        if app.item is None:
            lines.append(f"The {labels[cell]} is empty.")
        elif app.item.kind is ItemKind.CLEAN_PLATE:
            lines.append(f"The {labels[cell]} has a clean plate.")
        else:
            lines.append(f"The {labels[cell]} has a dirty plate ({app.progress} of 3 rinses done).")
    for cell in layout.tiles(TileKind.CHOPPING_BOARD):
        app = state.appliances[cell]
        if app.item is None:
            lines.append(f"The {labels[cell]} is empty.")
        elif app.item.kind is ItemKind.CHOPPED_ONION:
            lines.append(f"The {labels[cell]} has a chopped onion.")
        else:
            lines.append(f"The {labels[cell]} has a raw onion ({app.progress} of 2 chops done).")
    for cell in sorted(state.counters):
        item = state.counters[cell]
        if item is not None:
            lines.append(f"The {labels[cell]} has {_article(item.kind)}.")
    empty_shared = [labels[c] for c in layout.tiles(TileKind.SHARED_COUNTER) if state.counters[c] is None]
    if empty_shared:
        lines.append("Empty shared counters: " + ", ".join(empty_shared) + ".")
    return " ".join(lines)


def describe_locations(state: WorldState, agent_id: int) -> str:
    """Walking distances from the agent to the stations it can use."""
    layout = state.layout
    labels = layout.station_labels
    dist = layout_distances(layout, state.agents[agent_id].position)

    def reach(cell) -> Optional[int]:
        ds = [dist[s] for s, _ in layout.station_access.get(cell, ()) if s in dist]
        return min(ds) if ds else None

    lines = []
    kinds = (
        TileKind.MEAT_DISPENSER, TileKind.ONION_DISPENSER, TileKind.DIRTY_PLATE_DISPENSER,
        TileKind.GRILL, TileKind.SINK, TileKind.CHOPPING_BOARD, TileKind.DELIVERY,
        TileKind.SHARED_COUNTER,
    )
    for kind in kinds:
        for cell in layout.tiles(kind):
            d = reach(cell)
            if d is None:
                lines.append(f"The {labels[cell]} is unreachable.")
            else:
                lines.append(f"The {labels[cell]} is {d} units away.")
    for cell in sorted(state.counters):
        if state.counters[cell] is not None and layout.tile(cell) is TileKind.GENERAL_COUNTER:
            d = reach(cell)
            where = "unreachable" if d is None else f"{d} units away"
            lines.append(f"The {labels[cell]} is {where}.")
    empties = [reach(c) for c in layout.tiles(TileKind.GENERAL_COUNTER) if state.counters[c] is None]
    empties = [d for d in empties if d is not None]
    if empties:
        lines.append(f"The nearest empty general counter is {min(empties)} units away.")
    return " ".join(lines)


def describe_orders(state: WorldState) -> str:
    return f"1. {state.orders[0].value} (current), 2. {state.orders[1].value} (next)"


def _ago(now: int, t: int) -> str:
    k = now - t
    return "1 timestep ago" if k == 1 else f"{k} timesteps ago"


def build_prompt(
    state: WorldState,
    agent_id: int,
    personality: str,
    offered: Sequence[HighLevelAction],
    action_history: Sequence[CompletedAction] = (),
    messages: Sequence[Message] = (),
    comm: bool = True,
    action_history_len: int = 2,
    message_history_len: int = 2,
    layout_description: Optional[str] = None,
    names: Sequence[str] = AGENT_NAMES,
) -> str:
    """Assemble the full query for one agent.

    A pure function of its arguments: the same inputs always produce the
    same text.
    """
    me, other = names[agent_id], names[1 - agent_id]
    now = state.timestep
    desc = layout_description or state.layout.description or GENERIC_DESCRIPTION

    history = [a for a in action_history if a.agent == agent_id][-action_history_len:] if action_history_len else []
    hist_lines = [f"- {a.text} ({_ago(now, a.t)})" for a in history]

    parts = [
        f"You are {me}. Other agents are: {other}, a teammate cooking in the same kitchen.",
        f"Your personality: {personality}",
        f"Environment Details: {desc}",
        SEPARATOR,
        DOMAIN_KNOWLEDGE,
        SEPARATOR,
        f"Inventory: {describe_inventory(state, names)}",
        f"Environment Details: {describe_kitchen(state)}",
        f"Location Info: {describe_locations(state, agent_id)}",
        f"Order List: {describe_orders(state)}",
        "Action History:" + ("\n" + "\n".join(hist_lines) if hist_lines else " none yet"),
    ]
    if comm:
        recent = list(messages)[-message_history_len:] if message_history_len else []
        msg_lines = [f"- {names[m.sender]}: \"{m.text}\" ({_ago(now, m.t)})" for m in recent]
        parts.append("Message History:" + ("\n" + "\n".join(msg_lines) if msg_lines else " no messages yet"))
    parts.append(SEPARATOR)
    parts.append(OBJECTIVE)
    action_lines = "\n".join(f"{i}. {a.text}" for i, a in enumerate(offered))
    parts.append(f"First, choose an action from the following list:\n{action_lines}")
    if comm:
        parts.append("Then, send a message to the other agent.")
        parts.append("Answer in exactly this format:\nAction: <action number>\nMessage: <message to the other agent>")
    else:
        parts.append("Answer in exactly this format:\nAction: <action number>")
    return "\n\n".join(parts) + "\n"


def layout_summary(layout: Layout) -> str:
    return layout.description or GENERIC_DESCRIPTION
