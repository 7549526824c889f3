"""
Does talking help?
==================

The same pair of personalities plays with and without messages. The trend
table reports the signed change of each teamwork measure, and a proportion
test asks whether one condition wins more often than chance.
"""
# %%
from kitchenqd.agents.backends import ScriptedBackend
from kitchenqd.agents.episode import EpisodeConfig, run_episode
from kitchenqd.analysis import format_percent, proportion_test, trend_table
from kitchenqd.sim import load_layout

layout = load_layout("forced")
prompts = ("You keep the grill busy and tell your teammate what you need.",
           "You chop onions, wash plates and pass them over quickly.")

runs = {}
for comm in (True, False):
    runs[comm] = [run_episode(layout, prompts, ScriptedBackend(s), EpisodeConfig(horizon=300, comm=comm), seed=s)
                  for s in range(8)]

# %%
for metric, change in trend_table(runs[True], runs[False]).items():
    print(f"{metric:22s} {format_percent(change)}")

# %%
# Paired episodes share a seed. Count the pairs where messaging scored higher.

wins = sum(sum(a.rewards) > sum(b.rewards) for a, b in zip(runs[True], runs[False]))
print(f"messaging ahead in {wins}/8 paired episodes")
print("z-test p =", round(proportion_test(wins, 8), 4), " exact p =", round(proportion_test(wins, 8, method="exact"), 4))

# %%
# For reference, 12 wins out of 16 against a fair coin.

print(round(proportion_test(12, 16), 4), round(proportion_test(12, 16, method="exact"), 4))
