"""Completion backends: an OpenAI-compatible HTTP client and a scripted stand-in.

The scripted backend reads the same prompt text an LLM would and answers in
the same formats, so episodes and the search loop can run offline and
bit-reproducibly. It handles three kinds of prompt: agent action queries,
directed mutation requests and random-personality requests.
"""
from __future__ import annotations

import hashlib
import math
import os
import random
import re
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Protocol, Sequence

import httpx


class BackendFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 1.1
    top_p: float = 1.0
    max_new_tokens: int = 128
    # Per-request sampling seed; forwarded to endpoints that honour it.
    seed: Optional[int] = None


class LLMBackend(Protocol):
    def complete(self, prompt: str, params: SamplingParams = SamplingParams()) -> str: ...


# --------------------------------------------------------------------------
# HTTP


class HTTPBackend:
    """Chat-completions client with retry and exponential backoff.

    ``base_url`` should point at the API root (``.../v1``); the endpoint,
    key and model fall back to ``KITCHENQD_BACKEND_URL``,
    ``KITCHENQD_API_KEY`` and ``KITCHENQD_MODEL`` (then the ``OPENAI_*``
    equivalents).
    """

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = (
            base_url
            or os.environ.get("KITCHENQD_BACKEND_URL")
            or os.environ.get("OPENAI_BASE_URL")
            or ""
        ).rstrip("/")
        if not self.base_url:
            raise BackendFailure("no backend URL given and KITCHENQD_BACKEND_URL is unset")
        self.api_key = api_key or os.environ.get("KITCHENQD_API_KEY") or os.environ.get("OPENAI_API_KEY", "")
        self.model = model or os.environ.get("KITCHENQD_MODEL") or os.environ.get("OPENAI_MODEL") or "default"
        self.retries = retries
        self.backoff = backoff
        self._sleep = sleep
        self._client = client or httpx.Client(timeout=timeout)

    def payload(self, prompt: str, params: SamplingParams) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
            **({"seed": params.seed} if params.seed is not None else {}),
        }

    def complete(self, prompt: str, params: SamplingParams = SamplingParams()) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        url = f"{self.base_url}/chat/completions"
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=self.payload(prompt, params), headers=headers)
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
                return content or ""
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                last = exc
        raise BackendFailure(f"chat completion failed after {self.retries + 1} attempts: {last}")


# --------------------------------------------------------------------------
# Scripted

CATEGORIES = ("meat", "onion", "plate", "dish", "counter", "wait")

# Directive phrase (as written by the mutation step) -> action category it pushes.
DIRECTIVE_CATEGORY = {
    "onions picked": "onion",
    "onions placed on the board": "onion",
    "onion chopped": "onion",
    "meat picked": "meat",
    "meat put on grill": "meat",
    "dirty plates picked": "plate",
    "clean plates picked": "plate",
    "plates placed in the sink": "plate",
    "dish served": "dish",
}

KEYWORDS = {
    "meat": ("meat", "steak", "grill"),
    "onion": ("onion", "chop", "garnish"),
    "plate": ("plate", "rinse", "sink", "wash"),
    "dish": ("deliver", "serve", "dish"),
    "counter": ("help", "share", "pass", "counter", "teammate", "together"),
}
_NEGATION = re.compile(r"\b(avoid|never|don't|do not|hate|dislike|less|leave)\b", re.IGNORECASE)

DIRECTIVE_GAIN = 1.0
KEYWORD_GAIN = 0.5
UNREACHABLE_PENALTY = 4.0
# Baseline competence, independent of personality: fetching an ingredient whose
# appliance is occupied is rarely useful, and so is parking one on a counter
# while its appliance is free and reachable. When the appliance is out of
# reach, only a shared counter gets the item to the teammate, and taking it
# back off a counter undoes the handoff.
USELESS_PENALTY = 3.0
_FETCH_NEEDS = {
    "pick up a meat from the meat dispenser": "grill",
    "pick up an onion from the onion dispenser": "chopping board",
    "pick up a dirty plate from the dirty plate dispenser": "sink",
}
_PARK_NEEDS = {"raw meat": "grill", "raw onion": "chopping board", "dirty plate": "sink"}
_PARK_ACTION = re.compile(r"^place (raw meat|raw onion|dirty plate) on ")
_TAKE_ACTION = re.compile(r"^pick up (raw meat|raw onion|dirty plate) from ")
_EMPTY_APPLIANCE = re.compile(r"The (grill|sink|chopping board)(?: \d+)? is empty")

_DIRECTIVE_RE = re.compile(
    r"\b(increase|decrease) number of (" + "|".join(map(re.escape, DIRECTIVE_CATEGORY)) + r")",
    re.IGNORECASE,
)
_ACTION_LINE = re.compile(r"^(\d+)\. (.+)$", re.MULTILINE)
_COUNTER_ACTION = re.compile(r"(from|on) (nearest )?(general|shared) counter")


def stable_seed(*parts: object) -> int:
    h = hashlib.sha256("\x1f".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "big")


def action_category(text: str) -> str:
    low = text.lower()
    if low.startswith("wait"):
        return "wait"
    if _COUNTER_ACTION.search(low):
        return "counter"
    if "garnish" in low or "deliver" in low or "pick up steak" in low:
        return "dish"
    if "meat" in low:
        return "meat"
    if "onion" in low:
        return "onion"
    return "plate"


_KEYWORD_RES = {
    cat: re.compile(r"\b(?:" + "|".join(map(re.escape, words)) + ")")
    for cat, words in KEYWORDS.items()
}


@lru_cache(maxsize=4096)
def _personality_weights(personality: str) -> tuple[tuple[str, float], ...]:
    w = dict.fromkeys(CATEGORIES, 0.0)
    for verb, phrase in _DIRECTIVE_RE.findall(personality):
        sign = 1.0 if verb.lower() == "increase" else -1.0
        w[DIRECTIVE_CATEGORY[phrase.lower()]] += sign * DIRECTIVE_GAIN
    rest = _DIRECTIVE_RE.sub(" ", personality)
    for sentence in re.split(r"[.!?\n]+", rest):
        low = sentence.lower()
        sign = -1.0 if _NEGATION.search(low) else 1.0
        for cat, pattern in _KEYWORD_RES.items():
            w[cat] += sign * KEYWORD_GAIN * len(pattern.findall(low))
    return tuple(w.items())


def personality_weights(personality: str) -> dict[str, float]:
    """Category preference weights implied by a personality text."""
    return dict(_personality_weights(personality))


def _section(prompt: str, start: str, stops: Sequence[str]) -> str:
    i = prompt.find(start)
    if i < 0:
        return ""
    i += len(start)
    ends = [j for j in (prompt.find(s, i) for s in stops) if j >= 0]
    return prompt[i: min(ends) if ends else len(prompt)]


def action_probabilities(prompt: str, offered: Sequence[str]) -> list[float]:
    """Softmax over categories (uniform within a category), with unreachable
    stations heavily discounted."""
    personality = _section(prompt, "Your personality:", ("\n\n",))
    w = personality_weights(personality)
    locations = _section(prompt, "Location Info:", ("\n",))
    unreachable = re.findall(r"The ([a-z ]+?(?: \d+)?) is unreachable", locations)
    no_free_general = "nearest empty general counter" not in locations
    kitchen = _section(prompt, "Inventory:", ("Location Info:",))
    free = set(_EMPTY_APPLIANCE.findall(kitchen))

    cats = [action_category(a) for a in offered]
    counts = {c: cats.count(c) for c in set(cats)}
    scores = []
    for text, cat in zip(offered, cats):
        s = w[cat] - math.log(counts[cat])
        low = text.lower()
        if low in _FETCH_NEEDS and _FETCH_NEEDS[low] not in free:
            s -= USELESS_PENALTY
        park = _PARK_ACTION.match(low)
        if park:
            appliance = _PARK_NEEDS[park.group(1)]
            if appliance in unreachable:
                if "general counter" in low:
                    s -= USELESS_PENALTY
            elif appliance in free:
                s -= USELESS_PENALTY
        take = _TAKE_ACTION.match(low)
        if take and _PARK_NEEDS[take.group(1)] in unreachable:
            s -= USELESS_PENALTY
        if any(re.search(r"\b" + re.escape(u) + r"\b(?! \d)", low) for u in unreachable):
            s -= UNREACHABLE_PENALTY
        if "nearest general counter" in low and no_free_general:
            s -= UNREACHABLE_PENALTY
        scores.append(s)
    top = max(scores)
    exps = [math.exp(s - top) for s in scores]
    z = sum(exps)
    return [e / z for e in exps]


def scripted_policy(prompt: str, seed: int, offered: Optional[Sequence[str]] = None) -> str:
    """Answer an agent query the way a personality-following player would.

    Same (prompt, seed) always gives the same text.
    """
    if offered is None:
        listing = _section(prompt, "choose an action from the following list:", ("\n\n",))
        offered = [m.group(2) for m in _ACTION_LINE.finditer(listing)]
    if not offered:
        return "Action: none"
    rng = random.Random(stable_seed("policy", seed, prompt))
    probs = action_probabilities(prompt, offered)
    idx = rng.choices(range(len(offered)), weights=probs)[0]
    out = f"Action: {idx}"
    if "send a message to the other agent" in prompt:
        cat = action_category(offered[idx])
        text = "I will wait a moment." if cat == "wait" else f"I am working on {cat} tasks now."
        out += f"\nMessage: {text}"
    return out


MAX_PERSONALITY_WORDS = 100

_RANDOM_TRAITS = (
    "You love {a}.", "You prefer {a}.", "You avoid {a}.", "You are happiest when {a}.",
    "You rarely bother with {a}.", "You enjoy {a} more than anything.",
)
_RANDOM_ACTIVITIES = (
    "grilling meat", "chopping onions", "washing plates", "serving dishes",
    "helping your teammate", "working alone", "moving quickly", "thinking ahead",
    "keeping the kitchen tidy", "passing items over the counter",
)


def _trim(text: str, max_words: int) -> str:
    sentences = [s.strip() for s in re.split(r"(?<=[.!?])\s+", text.strip()) if s.strip()]
    while len(" ".join(sentences).split()) > max_words and len(sentences) > 1:
        sentences.pop(0)
    return " ".join(sentences)


def scripted_mutation(prompt: str, max_words: int = MAX_PERSONALITY_WORDS) -> str:
    """Append the requested direction to the current personality."""
    personality = _section(prompt, "The agent currently has the following personality:", ("Transform the personality",)).strip()
    direction = _section(prompt, "play the game optimally with ", (". ", ".\n")).strip()
    if not direction:
        return personality
    return _trim(f"{personality} Always {direction}.", max_words)


def scripted_random_personalities(prompt: str, seed: int) -> str:
    m = re.search(r"Create (\d+) random personalities", prompt)
    n = int(m.group(1)) if m else 4
    rng = random.Random(stable_seed("random", seed, prompt))
    lines = []
    for i in range(n):
        k = rng.randint(1, 3)
        traits = [rng.choice(_RANDOM_TRAITS).format(a=rng.choice(_RANDOM_ACTIVITIES)) for _ in range(k)]
        lines.append(f"{i + 1}. " + " ".join(traits))
    return "\n".join(lines)


class ScriptedBackend:
    """Deterministic offline backend; stateless across calls."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, prompt: str, params: SamplingParams = SamplingParams()) -> str:
        seed = self.seed if params.seed is None else stable_seed(self.seed, params.seed)
        if "Transform the personality" in prompt:
            return scripted_mutation(prompt)
        if "random personalities" in prompt:
            return scripted_random_personalities(prompt, seed)
        return scripted_policy(prompt, seed)
