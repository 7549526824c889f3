"""Directed mutation of personality prompts and the random-personality baseline."""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from ..agents.backends import LLMBackend, SamplingParams, stable_seed
from ..agents.prompt import DOMAIN_KNOWLEDGE, SEPARATOR

MAX_PERSONALITY_WORDS = 100
MUTATION_ATTEMPTS = 3


def initial_prompt() -> str:
    return resources.files("kitchenqd.data").joinpath("initial_prompt.txt").read_text().strip()


@dataclass(frozen=True)
class MeasurePhrase:
    """How a measure is named in a mutation direction and what the mutator is told."""

    name: str
    increase: str
    decrease: str
    # Workload diffs move in opposite directions for the two agents.
    mirrored: bool = True


MEASURE_PHRASES = {
    "diff_onions_picked": MeasurePhrase(
        "number of onions picked",
        "Encourage the agent to fetch raw onions from the onion dispenser as often as it can",
        "Encourage the agent to leave fetching onions from the onion dispenser to its teammate",
    ),
    "diff_onions_on_board": MeasurePhrase(
        "number of onions placed on the board",
        "Encourage the agent to carry raw onions to the chopping board",
        "Encourage the agent to let its teammate bring onions to the chopping board",
    ),
    "diff_onions_chopped": MeasurePhrase(
        "number of onion chopped",
        "Encourage the agent to do the chopping at the chopping board",
        "Encourage the agent to leave the chopping to its teammate",
    ),
    "diff_meat_picked": MeasurePhrase(
        "number of meat picked",
        "Encourage the agent to focus on taking raw meat from the meat dispenser",
        "Encourage the agent to let its teammate take raw meat from the meat dispenser",
    ),
    "diff_meat_on_grill": MeasurePhrase(
        "number of meat put on grill",
        "Encourage the agent to keep the grill busy by putting raw meat on it",
        "Encourage the agent to leave the grilling to its teammate",
    ),
    "diff_dirty_plates_picked": MeasurePhrase(
        "number of dirty plates picked",
        "Encourage the agent to collect dirty plates from the dirty plate dispenser",
        "Encourage the agent to let its teammate collect dirty plates",
    ),
    "diff_clean_plates_picked": MeasurePhrase(
        "number of clean plates picked",
        "Encourage the agent to take clean plates out of the sink",
        "Encourage the agent to let its teammate take clean plates out of the sink",
    ),
    "diff_plates_in_sink": MeasurePhrase(
        "number of plates placed in the sink",
        "Encourage the agent to bring dirty plates to the sink",
        "Encourage the agent to let its teammate bring dirty plates to the sink",
    ),
    "diff_dishes_served": MeasurePhrase(
        "number of dish served",
        "Encourage the agent to carry finished dishes to the delivery location",
        "Encourage the agent to let its teammate handle deliveries",
    ),
    "avg_action_delay": MeasurePhrase(
        "action delay",
        "Encourage the agent to pause and deliberate between interactions",
        "Encourage the agent to act quickly with no idle time between interactions",
        mirrored=False,
    ),
    "percent_contribution": MeasurePhrase(
        "percent contribution",
        "Encourage the agent to work on the same dishes as its teammate",
        "Encourage the agent to finish whole dishes on its own",
        mirrored=False,
    ),
    "specialization": MeasurePhrase(
        "specialization",
        "Encourage the agent to stick to one kind of task",
        "Encourage the agent to switch between many kinds of tasks",
        mirrored=False,
    ),
}


@dataclass(frozen=True)
class Instruction:
    """What one agent's personality should be pushed toward."""

    direction: str
    context: str


def sample_direction(rng: np.random.Generator, k: int) -> tuple[int, ...]:
    """Uniform over {-1, 0, 1}^k with the all-zero vector rejected."""
    if k < 1:
        raise ValueError("direction needs at least one dimension")
    while True:
        d = rng.integers(-1, 2, size=k)
        if d.any():
            return tuple(int(x) for x in d)


def direction_to_instructions(direction: Sequence[int], measures: Sequence[str]) -> tuple[Instruction, Instruction]:
    if len(direction) != len(measures):
        raise ValueError("direction and measure list differ in length")
    if not any(direction):
        raise ValueError("direction is all zero")
    parts: list[list[tuple[str, str]]] = [[], []]
    for sign, measure in zip(direction, measures):
        if sign == 0:
            continue
        phrase = MEASURE_PHRASES[measure]
        for agent in (0, 1):
            up = sign > 0 if (agent == 0 or not phrase.mirrored) else sign < 0
            verb, ctx = ("increase", phrase.increase) if up else ("decrease", phrase.decrease)
            parts[agent].append((f"{verb} {phrase.name}", ctx))
    return tuple(
        Instruction(" and ".join(d for d, _ in p), ". ".join(c for _, c in p)) for p in parts
    )


def mutation_prompt(personality: str, instruction: Instruction) -> str:
    return (
        f"{DOMAIN_KNOWLEDGE}\n\n{SEPARATOR}\n\n"
        f"The agent currently has the following personality:\n\n{personality}\n\n"
        f"Transform the personality to force the agent to play the game optimally with "
        f"{instruction.direction}. {instruction.context}. Ensure the new personality is in "
        f"second person. Keep the new personality brief and to the point. "
        f"Only return the transformed personality.\n"
    )


def random_personalities_prompt(initial: str, n: int) -> str:
    return (
        f"{DOMAIN_KNOWLEDGE}\n\n{SEPARATOR}\n\n"
        f"The agent currently has the following personality:\n\n{initial}\n\n"
        f"Create {n} random personalities for the agent to play the game optimally with a "
        f"random strategy. Ensure the new personality is in second person. Keep the new "
        f"personalities brief and to the point.\n"
    )


def clean_personality(text: str, max_words: int = MAX_PERSONALITY_WORDS) -> Optional[str]:
    """Normalized completion, or None when empty or over the word budget."""
    text = text.strip().strip('"').strip()
    text = re.sub(r"^(new |transformed )?personality:\s*", "", text, flags=re.IGNORECASE)
    text = " ".join(text.split())
    if not text or len(text.split()) > max_words:
        return None
    return text


@dataclass(frozen=True)
class MutationResult:
    prompts: tuple[str, ...]
    # Agents whose mutation fell back to the parent prompt.
    kept_parent: tuple[int, ...] = ()


def mutate_prompts(
    backend: LLMBackend,
    parent: Sequence[str],
    instructions: Sequence[Instruction],
    params: SamplingParams = SamplingParams(),
    max_words: int = MAX_PERSONALITY_WORDS,
    attempts: int = MUTATION_ATTEMPTS,
) -> MutationResult:
    """Mutate each agent's personality independently, one query per attempt.

    ``BackendFailure`` from the backend propagates.
    """
    child, kept = [], []
    for agent, (personality, instruction) in enumerate(zip(parent, instructions)):
        prompt = mutation_prompt(personality, instruction)
        new = None
        for attempt in range(attempts):
            p = params if params.seed is None else _reseed(params, agent, attempt)
            new = clean_personality(backend.complete(prompt, p), max_words)
            if new is not None:
                break
        if new is None:
            kept.append(agent)
            new = personality
        child.append(new)
    return MutationResult(tuple(child), tuple(kept))


_NUMBERED = re.compile(r"^\s*(?:\d+[.):]|[-*])\s*(.+)$")


def parse_personality_list(text: str) -> list[str]:
    """Split a numbered or bulleted list (or blank-line separated paragraphs)."""
    items = [m.group(1).strip() for m in map(_NUMBERED.match, text.splitlines()) if m]
    if not items:
        items = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    return items


def random_personalities(
    backend: LLMBackend,
    initial: str,
    n: int,
    params: SamplingParams = SamplingParams(),
    max_words: int = MAX_PERSONALITY_WORDS,
    attempts: int = MUTATION_ATTEMPTS,
) -> list[str]:
    """``n`` fresh personalities from one request; unusable slots are re-requested
    and finally filled with ``initial``."""
    prompt = random_personalities_prompt(initial, n)
    out: list[str] = []
    for attempt in range(attempts):
        p = params if params.seed is None else _reseed(params, -1, attempt)
        for item in parse_personality_list(backend.complete(prompt, p)):
            cleaned = clean_personality(item, max_words)
            if cleaned is not None and len(out) < n:
                out.append(cleaned)
        if len(out) == n:
            break
    return out + [initial] * (n - len(out))


def _reseed(params: SamplingParams, agent: int, attempt: int) -> SamplingParams:
    return replace(params, seed=stable_seed(params.seed, agent, attempt))
