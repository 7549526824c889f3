from __future__ import annotations

import enum
from dataclasses import dataclass


class ItemKind(enum.Enum):
    RAW_MEAT = "raw meat"
    COOKED_MEAT = "cooked meat"
    RAW_ONION = "raw onion"
    CHOPPED_ONION = "chopped onion"
    DIRTY_PLATE = "dirty plate"
    CLEAN_PLATE = "clean plate"
    STEAK_DISH = "steak dish"
    STEAK_ONION_DISH = "steak onion dish"

    @property
    def is_dish(self) -> bool:
        return self in (ItemKind.STEAK_DISH, ItemKind.STEAK_ONION_DISH)


DISHES = (ItemKind.STEAK_DISH, ItemKind.STEAK_ONION_DISH)


@dataclass(frozen=True)
class Item:
    """A physical item. ``uid`` is unique within an episode.

    ``lineage`` holds the uids of every item merged into this one (itself
    included), so a delivered dish knows all the ingredients and plates
    that went into it.
    """

    kind: ItemKind
    uid: int
    lineage: frozenset[int]

    @classmethod
    def new(cls, kind: ItemKind, uid: int) -> Item:
        return cls(kind, uid, frozenset((uid,)))

    def becomes(self, kind: ItemKind) -> Item:
        return Item(kind, self.uid, self.lineage)


def merge(a: Item, b: Item, kind: ItemKind, uid: int) -> Item:
    return Item(kind, uid, a.lineage | b.lineage | {uid})
