from __future__ import annotations

import re
from typing import NamedTuple, Optional, Sequence

from .actions import WAIT, HighLevelAction

_ACTION_INDEX = re.compile(r"action\s*[:=\-]?\s*\[?#?\s*(\d+)\b", re.IGNORECASE)
_LEADING_INDEX = re.compile(r"^\s*\[?#?(\d+)\b")
_MESSAGE = re.compile(r"message\s*:\s*(.*)", re.IGNORECASE | re.DOTALL)


class ParsedResponse(NamedTuple):
    action: HighLevelAction
    message: Optional[str]
    fallback: bool


def _pick_by_text(raw: str, offered: Sequence[HighLevelAction]) -> Optional[HighLevelAction]:
    low = raw.lower()
    hits = [a for a in offered if a.text.lower() in low]
    # Drop hits that are only matched as part of a longer hit.
    hits = [a for a in hits if not any(a is not b and a.text.lower() in b.text.lower() for b in hits)]
    return hits[0] if len(hits) == 1 else None


def parse_response(raw: str, offered: Sequence[HighLevelAction], comm: bool = True) -> ParsedResponse:
    """Recover (action, message) from a completion. Never raises.

    Tries an explicit index first (``Action: 3``, or a bare leading number),
    then a unique case-insensitive mention of an offered action's text.
    Anything else falls back to waiting.
    """
    if not isinstance(raw, str):
        raw = "" if raw is None else str(raw)
    msg_match = _MESSAGE.search(raw)
    head = raw[: msg_match.start()] if msg_match else raw

    chosen: Optional[HighLevelAction] = None
    m = _ACTION_INDEX.search(head) or _LEADING_INDEX.search(head)
    if m:
        idx = int(m.group(1))
        if 0 <= idx < len(offered):
            chosen = offered[idx]
    if chosen is None:
        chosen = _pick_by_text(head, offered)

    message = None
    if comm and msg_match:
        text = msg_match.group(1).strip().strip('"').strip()
        message = text or None

    if chosen is None:
        wait = next((a for a in offered if a.is_wait), WAIT)
        return ParsedResponse(wait, message, True)
    return ParsedResponse(chosen, message, False)
