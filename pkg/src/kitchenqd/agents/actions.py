"""High-level action templates and the per-state filter that offers them."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from ..sim.items import ItemKind
from ..sim.layout import Cell, TileKind
from ..sim.state import Event, EventKind, WorldState


class Template(str, enum.Enum):
    PICKUP_COUNTER = "Pick up {item} from {station}"
    PLACE_GENERAL = "Place {item} on nearest general counter"
    PLACE_SHARED = "Place {item} on {station}"
    PICK_DIRTY_PLATE = "Pick up a dirty plate from the dirty plate dispenser"
    PLACE_SINK = "Place dirty plate in hand in {station}"
    RINSE = "Do one rinse of the dirty plate in {station}"
    PICK_CLEAN_PLATE = "Pick up the clean plate from {station}"
    PLATE_STEAK = "Use clean plate in hand to pick up steak from {station}"
    PICK_ONION = "Pick up an onion from the onion dispenser"
    PLACE_BOARD = "Put raw onion in hand on {station}"
    CHOP = "Do one chop of the onion on {station}"
    GARNISH = "Add garnish from {station} to the steak dish in hand"
    PICK_MEAT = "Pick up a meat from the meat dispenser"
    PLACE_GRILL = "Put raw meat in hand on {station} to cook"
    DELIVER_STEAK = "Deliver the steak dish in hand to {station}"
    DELIVER_STEAK_ONION = "Deliver the steak onion dish in hand to {station}"
    WAIT = "Wait for 5 timesteps"


WAIT_TICKS = 5

# Action groups used by the specialization measure.
INGREDIENT, PLATE, DISH_CREATION, DELIVERY = "ingredient", "plate", "dish_creation", "delivery"
ACTION_GROUPS = (INGREDIENT, PLATE, DISH_CREATION, DELIVERY)

_TEMPLATE_GROUP = {
    Template.PICK_DIRTY_PLATE: PLATE,
    Template.PLACE_SINK: PLATE,
    Template.RINSE: PLATE,
    Template.PICK_CLEAN_PLATE: PLATE,
    Template.PLATE_STEAK: DISH_CREATION,
    Template.GARNISH: DISH_CREATION,
    Template.PICK_ONION: INGREDIENT,
    Template.PLACE_BOARD: INGREDIENT,
    Template.CHOP: INGREDIENT,
    Template.PICK_MEAT: INGREDIENT,
    Template.PLACE_GRILL: INGREDIENT,
    Template.DELIVER_STEAK: DELIVERY,
    Template.DELIVER_STEAK_ONION: DELIVERY,
}

_ITEM_GROUP = {
    ItemKind.RAW_MEAT: INGREDIENT,
    ItemKind.COOKED_MEAT: INGREDIENT,
    ItemKind.RAW_ONION: INGREDIENT,
    ItemKind.CHOPPED_ONION: INGREDIENT,
    ItemKind.DIRTY_PLATE: PLATE,
    ItemKind.CLEAN_PLATE: PLATE,
    ItemKind.STEAK_DISH: DISH_CREATION,
    ItemKind.STEAK_ONION_DISH: DISH_CREATION,
}

_COUNTER_TEMPLATES = (Template.PICKUP_COUNTER, Template.PLACE_GENERAL, Template.PLACE_SHARED)


def action_group(template: Template | str, item: Optional[ItemKind | str] = None) -> Optional[str]:
    """Specialization group of a completed action; None for Wait."""
    template = Template[template] if isinstance(template, str) and template in Template.__members__ else Template(template)
    if template is Template.WAIT:
        return None
    if template in _COUNTER_TEMPLATES:
        if item is None:
            return None
        kind = ItemKind[item] if isinstance(item, str) else item
        return _ITEM_GROUP[kind]
    return _TEMPLATE_GROUP[template]


_DISPENSER_TILE = {
    Template.PICK_DIRTY_PLATE: TileKind.DIRTY_PLATE_DISPENSER,
    Template.PICK_ONION: TileKind.ONION_DISPENSER,
    Template.PICK_MEAT: TileKind.MEAT_DISPENSER,
}

_EXPECTED_EVENT = {
    Template.PICKUP_COUNTER: EventKind.PICKUP,
    Template.PLACE_GENERAL: EventKind.PLACE,
    Template.PLACE_SHARED: EventKind.PLACE,
    Template.PICK_DIRTY_PLATE: EventKind.PICKUP,
    Template.PLACE_SINK: EventKind.PLACE,
    Template.RINSE: EventKind.RINSE,
    Template.PICK_CLEAN_PLATE: EventKind.PICKUP,
    Template.PLATE_STEAK: EventKind.PLATE_STEAK,
    Template.PICK_ONION: EventKind.PICKUP,
    Template.PLACE_BOARD: EventKind.PLACE,
    Template.CHOP: EventKind.CHOP,
    Template.GARNISH: EventKind.GARNISH,
    Template.PICK_MEAT: EventKind.PICKUP,
    Template.PLACE_GRILL: EventKind.PLACE,
    Template.DELIVER_STEAK: EventKind.DELIVER,
    Template.DELIVER_STEAK_ONION: EventKind.DELIVER,
}


@dataclass(frozen=True)
class HighLevelAction:
    template: Template
    target: Optional[Cell] = None
    item: Optional[ItemKind] = None
    label: str = ""

    @property
    def text(self) -> str:
        return self.template.value.format(
            item=self.item.value if self.item else "", station=self.label
        )

    def __str__(self) -> str:
        return self.text

    @property
    def is_wait(self) -> bool:
        return self.template is Template.WAIT

    def stations(self, state: WorldState) -> list[Cell]:
        """Tiles at which this action can be carried out right now."""
        if self.target is not None:
            return [self.target]
        if self.template is Template.PLACE_GENERAL:
            return [c for c in state.layout.tiles(TileKind.GENERAL_COUNTER) if state.counters[c] is None]
        if self.template in _DISPENSER_TILE:
            return list(state.layout.tiles(_DISPENSER_TILE[self.template]))
        return []

    def completed_by(self, event: Event) -> bool:
        if self.template is Template.WAIT or event.kind is not _EXPECTED_EVENT[self.template]:
            return False
        if self.target is not None:
            return event.cell == self.target
        if self.template is Template.PLACE_GENERAL:
            return event.tile is TileKind.GENERAL_COUNTER
        return event.tile is _DISPENSER_TILE[self.template]


WAIT = HighLevelAction(Template.WAIT)


def available_actions(state: WorldState, agent_id: int) -> list[HighLevelAction]:
    """Actions whose hand/appliance preconditions hold now (space is ignored)."""
    layout = state.layout
    labels = layout.station_labels
    held = state.agents[agent_id].held
    kind = held.kind if held is not None else None
    out: list[HighLevelAction] = []

    def add(template: Template, target: Optional[Cell] = None, item: Optional[ItemKind] = None) -> None:
        out.append(HighLevelAction(template, target, item, labels[target] if target else ""))

    # Counter actions
    counter_cells = layout.tiles(TileKind.GENERAL_COUNTER) + layout.tiles(TileKind.SHARED_COUNTER)
    if held is None:
        for cell in sorted(counter_cells):
            content = state.counters[cell]
            if content is not None:
                add(Template.PICKUP_COUNTER, cell, content.kind)
    else:
        if any(state.counters[c] is None for c in layout.tiles(TileKind.GENERAL_COUNTER)):
            add(Template.PLACE_GENERAL, item=kind)
        for cell in layout.tiles(TileKind.SHARED_COUNTER):
            if state.counters[cell] is None:
                add(Template.PLACE_SHARED, cell, kind)

    sinks = layout.tiles(TileKind.SINK)
    grills = layout.tiles(TileKind.GRILL)
    boards = layout.tiles(TileKind.CHOPPING_BOARD)
    deliveries = layout.tiles(TileKind.DELIVERY)
    apps = state.appliances

    # Plate actions
    if held is None:
        add(Template.PICK_DIRTY_PLATE)
        for cell in sinks:
            app = apps[cell]
            if app.item is not None and app.progress < 3:
                add(Template.RINSE, cell)
        for cell in sinks:
            app = apps[cell]
            if app.item is not None and app.item.kind is ItemKind.CLEAN_PLATE:
                add(Template.PICK_CLEAN_PLATE, cell)
    elif kind is ItemKind.DIRTY_PLATE:
        for cell in sinks:
            if apps[cell].item is None:
                add(Template.PLACE_SINK, cell)
    elif kind is ItemKind.CLEAN_PLATE:
        for cell in grills:
            app = apps[cell]
            if app.item is not None and app.item.kind is ItemKind.COOKED_MEAT:
                add(Template.PLATE_STEAK, cell)

    # Onion actions
    if held is None:
        add(Template.PICK_ONION)
        for cell in boards:
            app = apps[cell]
            if app.item is not None and app.progress < 2:
                add(Template.CHOP, cell)
    elif kind is ItemKind.RAW_ONION:
        for cell in boards:
            if apps[cell].item is None:
                add(Template.PLACE_BOARD, cell)
    elif kind is ItemKind.STEAK_DISH:
        for cell in boards:
            app = apps[cell]
            if app.item is not None and app.item.kind is ItemKind.CHOPPED_ONION:
                add(Template.GARNISH, cell)

    # Meat actions
    if held is None:
        add(Template.PICK_MEAT)
    elif kind is ItemKind.RAW_MEAT:
        for cell in grills:
            if apps[cell].item is None:
                add(Template.PLACE_GRILL, cell)
    elif kind is ItemKind.STEAK_DISH:
        for cell in deliveries:
            add(Template.DELIVER_STEAK, cell)
    elif kind is ItemKind.STEAK_ONION_DISH:
        for cell in deliveries:
            add(Template.DELIVER_STEAK_ONION, cell)

    out.append(WAIT)
    return out


def find_action(offered: Sequence[HighLevelAction], text: str) -> Optional[HighLevelAction]:
    for a in offered:
        if a.text == text:
            return a
    return None
