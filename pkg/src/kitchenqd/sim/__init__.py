"""Deterministic two-agent kitchen simulator."""
from .items import DISHES, Item, ItemKind
from .layout import (
    DIRECTIONS,
    SHIPPED_LAYOUTS,
    BadSpawn,
    Cell,
    Layout,
    LayoutError,
    MalformedGrid,
    MissingStation,
    TileKind,
    load_layout,
    parse_layout,
    validate_layout,
)
from .state import (
    COOK_TIME,
    DEFAULT_HORIZON,
    MOVES,
    Action,
    AgentState,
    Appliance,
    EpisodeOver,
    Event,
    EventKind,
    WorldState,
    apply_interact,
    init_state,
    resolve_movement,
    score_delivery,
    step,
)

__all__ = [
    "Action", "AgentState", "Appliance", "BadSpawn", "COOK_TIME", "Cell", "DEFAULT_HORIZON",
    "DIRECTIONS", "DISHES", "EpisodeOver", "Event", "EventKind", "Item", "ItemKind", "Layout",
    "LayoutError", "MOVES", "MalformedGrid", "MissingStation", "SHIPPED_LAYOUTS", "TileKind",
    "WorldState", "apply_interact", "init_state", "load_layout", "parse_layout",
    "resolve_movement", "score_delivery", "step", "validate_layout",
]
