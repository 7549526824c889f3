from collections import Counter

import numpy as np
import pytest

from kitchenqd.agents.backends import SamplingParams, ScriptedBackend, personality_weights
from kitchenqd.measures import MEASURE_IDS
from kitchenqd.qd.mutation import (
    MEASURE_PHRASES,
    Instruction,
    clean_personality,
    direction_to_instructions,
    initial_prompt,
    mutate_prompts,
    mutation_prompt,
    parse_personality_list,
    random_personalities,
    sample_direction,
)
from kitchenqd.qd.search import QD_MEASURES


class Scripted:
    """Returns queued answers in order, recording every prompt."""

    def __init__(self, *answers):
        self.answers = list(answers)
        self.prompts = []

    def complete(self, prompt, params=None):
        self.prompts.append(prompt)
        return self.answers.pop(0)


def test_initial_prompt_is_data():
    text = initial_prompt()
    assert text.startswith("You are always focused on the objective.")
    assert text == text.strip()


def test_every_measure_has_phrases():
    assert set(MEASURE_PHRASES) == set(MEASURE_IDS)


def test_direction_one_dim_is_nonzero():
    rng = np.random.default_rng(0)
    assert {sample_direction(rng, 1) for _ in range(200)} == {(-1,), (1,)}
    with pytest.raises(ValueError):
        sample_direction(rng, 0)


def test_direction_three_dims_is_balanced():
    rng = np.random.default_rng(1)
    draws = [sample_direction(rng, 3) for _ in range(26_000)]
    assert (0, 0, 0) not in draws
    patterns = Counter(draws)
    assert len(patterns) == 26
    assert all(abs(c - 1000) < 130 for c in patterns.values())
    # Each component: P(+1) = P(-1) = 9/26, P(0) = 8/26.
    for i in range(3):
        comp = Counter(d[i] for d in draws)
        assert abs(comp[1] / 26_000 - 9 / 26) < 0.01
        assert abs(comp[0] / 26_000 - 8 / 26) < 0.01


def test_direction_reproducible():
    a = [sample_direction(np.random.default_rng(5), 3) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_mirrored_instructions():
    a1, a2 = direction_to_instructions((1, 0, 0), QD_MEASURES)
    assert a1.direction == "increase number of meat put on grill"
    assert a2.direction == "decrease number of meat put on grill"
    b1, b2 = direction_to_instructions((0, 0, -1), QD_MEASURES)
    assert b1.direction == "decrease number of onion chopped"
    assert b2.direction == "increase number of onion chopped"
    c1, c2 = direction_to_instructions((1, -1, 0), QD_MEASURES)
    assert c1.direction == "increase number of meat put on grill and decrease number of dish served"
    assert c2.direction == "decrease number of meat put on grill and increase number of dish served"
    assert c1.context.count(". ") == 1
    with pytest.raises(ValueError):
        direction_to_instructions((0, 0, 0), QD_MEASURES)


def test_teamwork_directions_are_shared():
    a1, a2 = direction_to_instructions((1,), ("percent_contribution",))
    assert a1 == a2 and a1.direction.startswith("increase")


def test_directives_are_understood_by_scripted_policy():
    a1, a2 = direction_to_instructions((1, 0, 0), QD_MEASURES)
    assert personality_weights(f"You {a1.direction}.")["meat"] > 0
    assert personality_weights(f"You {a2.direction}.")["meat"] < 0


def test_mutation_prompt_template():
    p = mutation_prompt("Be calm.", Instruction("increase number of meat picked", "Fetch meat"))
    assert "The agent currently has the following personality:\n\nBe calm." in p
    assert "Transform the personality to force the agent to play the game optimally with " \
           "increase number of meat picked. Fetch meat." in p
    assert "---" in p and "steak dish" in p


def test_mutate_queries_each_agent_once():
    backend = Scripted("New one.", "New two.")
    res = mutate_prompts(backend, ("A.", "B."), [Instruction("x", "y"), Instruction("z", "w")])
    assert res.prompts == ("New one.", "New two.") and res.kept_parent == ()
    assert len(backend.prompts) == 2
    assert "A." in backend.prompts[0] and "B." in backend.prompts[1]


def test_mutate_keeps_parent_after_three_empty_answers():
    backend = Scripted("Mutated.", "", "  ", '""')
    res = mutate_prompts(backend, ("A.", "B."), [Instruction("x", "y")] * 2)
    assert res.prompts == ("Mutated.", "B.") and res.kept_parent == (1,)
    assert len(backend.prompts) == 4


def test_over_budget_counts_as_failure():
    long = "word " * 101
    res = mutate_prompts(Scripted(long, "ok.", "fine."), ("A.", "B."), [Instruction("x", "y")] * 2)
    assert res.prompts == ("ok.", "fine.")


def test_scripted_mutator_appends_directive():
    a1, a2 = direction_to_instructions((0, 1, 0), QD_MEASURES)
    res = mutate_prompts(ScriptedBackend(0), (initial_prompt(), initial_prompt()), (a1, a2),
                         SamplingParams(seed=3))
    assert a1.direction in res.prompts[0] and a2.direction in res.prompts[1]


def test_clean_personality():
    assert clean_personality('  "Personality: You  love\nmeat."  ') == "You love meat."
    assert clean_personality("") is None
    assert clean_personality("a " * 5, max_words=4) is None


def test_parse_personality_list():
    assert parse_personality_list("1. A\n2) B\n- C\n* D") == ["A", "B", "C", "D"]
    assert parse_personality_list("First one.\n\nSecond one.") == ["First one.", "Second one."]


def test_random_personalities_fill_and_fallback():
    got = random_personalities(ScriptedBackend(0), "Init.", 4, SamplingParams(seed=9))
    assert len(got) == 4 and all(got)
    assert got == random_personalities(ScriptedBackend(0), "Init.", 4, SamplingParams(seed=9))
    short = Scripted("1. One.", "", "")
    assert random_personalities(short, "Init.", 3) == ["One.", "Init.", "Init."]
