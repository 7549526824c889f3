"""
One episode in the Steakhouse kitchen
=====================================

Two agents with different personalities cook on the open layout. The
scripted backend stands in for a language model, so this runs offline.
"""
# %%
from kitchenqd.agents.backends import ScriptedBackend
from kitchenqd.agents.episode import EpisodeConfig, run_episode
from kitchenqd.analysis import replay_frames
from kitchenqd.measures import compute_measures
from kitchenqd.sim import load_layout

layout = load_layout("open")
print(layout.to_text())

# %%
# Alice likes the grill, Bob does the dishes.

prompts = ("You love cooking meat and never leave the grill alone.",
           "You wash plates and chop onions for your teammate.")
log = run_episode(layout, prompts, ScriptedBackend(0), EpisodeConfig(horizon=500), seed=0)
print("reward:", sum(log.rewards), "queries:", len(log.queries), "fallbacks:", log.n_fallbacks)

# %%
# What each agent finished, in order.

for c in log.completed[:12]:
    print(f"t={c.t:3d} {'Alice' if c.agent == 0 else 'Bob  '} {c.text}")

# %%
# The measures the search works with. Workload diffs are Alice minus Bob.

m = compute_measures(log)
for k, v in m.as_dict().items():
    print(f"{k:28s} {v:g}")

# %%
# A few replay frames (1 and 2 mark the agents).

frames = replay_frames(log)
for t in (0, 10, 20):
    print(f"t={t}\n{frames[t]}\n")
