import os
from dataclasses import replace
from pathlib import Path

from hypothesis import given
from hypothesis import strategies as st

from kitchenqd.agents.actions import available_actions
from kitchenqd.agents.prompt import build_prompt, describe_locations
from kitchenqd.episode_log import CompletedAction, Message
from kitchenqd.sim import Appliance, ItemKind, TileKind, init_state

GOLDEN = Path(__file__).parent / "golden" / "prompt_open.txt"

SECTIONS = [
    "You are Alice.", "Your personality:", "Environment Details:", "Inventory:", "Environment Details:",
    "Location Info:", "Order List:", "Action History:", "Message History:", "Your objective",
    "choose an action from the following list:", "send a message",
]


def scene(layout, t=40):
    s = init_state(layout, 3)
    s.timestep = t
    g = layout.tiles(TileKind.GRILL)[0]
    s.appliances[g] = Appliance(s.new_item(ItemKind.RAW_MEAT), 12)
    s.agents = (replace(s.agents[0], held=s.new_item(ItemKind.RAW_ONION)), s.agents[1])
    history = [
        CompletedAction(20, 0, "PICK_MEAT", "Pick up a meat from the meat dispenser", "RAW_MEAT", 0),
        CompletedAction(30, 1, "PICK_DIRTY_PLATE", "Pick up a dirty plate from the dirty plate dispenser", "DIRTY_PLATE", 2),
        CompletedAction(37, 0, "PICK_ONION", "Pick up an onion from the onion dispenser", "RAW_ONION", 1),
    ]
    messages = [Message(5, 1, "I'll wash plates."), Message(25, 0, "Meat is on."), Message(39, 1, "Thanks!")]
    return s, history, messages


def render(layout, comm=True, t=40):
    s, history, messages = scene(layout, t)
    return build_prompt(s, 0, "You are always focused on the objective.", available_actions(s, 0),
                        history, messages, comm=comm)


def test_golden_snapshot(open_layout):
    text = render(open_layout)
    if os.environ.get("KITCHENQD_REGEN_GOLDEN") or not GOLDEN.exists():
        GOLDEN.parent.mkdir(exist_ok=True)
        GOLDEN.write_text(text)
    assert text == GOLDEN.read_text()


def test_section_order(open_layout):
    text = render(open_layout)
    pos = 0
    for marker in SECTIONS:
        i = text.find(marker, pos)
        assert i >= 0, marker
        pos = i + 1


def test_relative_timesteps(open_layout):
    text = render(open_layout)
    assert "Pick up an onion from the onion dispenser (3 timesteps ago)" in text
    assert "Pick up a meat from the meat dispenser (20 timesteps ago)" in text
    # Only the agent's own last two completed actions appear.
    assert "dirty plate dispenser (10" not in text
    assert "(1 timestep ago)" in text  # the most recent message
    assert "I'll wash plates." not in text  # only the last two messages


def test_comm_disabled_hides_messages(open_layout):
    text = render(open_layout, comm=False)
    assert "Message History" not in text
    assert "send a message" not in text
    for m in ("Meat is on.", "Thanks!"):
        assert m not in text


def test_fresh_episode_has_empty_history(open_layout):
    s = init_state(open_layout, 0)
    text = build_prompt(s, 1, "p", available_actions(s, 1))
    assert "You are Bob." in text
    assert "Action History: none yet" in text
    assert "Message History: no messages yet" in text


def test_location_info_uses_path_distances(layouts):
    s = init_state(layouts["forced"], 0)
    text = describe_locations(s, 0)
    assert "units away" in text
    assert "unreachable" in text


@given(t=st.integers(41, 499), comm=st.booleans())
def test_prompt_is_pure(layouts, t, comm):
    assert render(layouts["open"], comm, t) == render(layouts["open"], comm, t)
