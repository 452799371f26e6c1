# # The seven-vehicle walkthrough
#
# A requests /content, G holds it. The first Interest floods, the Data
# comes back along the PIT and teaches each relay a MAC next hop, and the
# next Interest is unicast hop by hop.

# %%
from vndnsim.figures import GOLDEN, MACS, POSITIONS, replay_figures, run_fixture

for v, (x, y) in POSITIONS.items():
    print(f"{v} {MACS[v]} ({x:7.1f}, {y:7.1f})")

# %% [markdown]
# Every frame sent during the first 200 ms, as (sender, kind, segment, OMA,
# TMA).

# %%
run = run_fixture()
for tx in run.transmissions:
    print(tx)

# %% [markdown]
# The tables after the run: A knows both upstream neighbours, D learned G.

# %%
print(run.node("A").fib.dump())
print(run.node("D").fib.dump())

# %% [markdown]
# The expected frames per figure, and the replay verdicts.

# %%
for fig, frames in GOLDEN.items():
    print(fig, [str(f) for f in frames])
print(replay_figures())

# %% [markdown]
# Removing D breaks the upper path, so the Data frame from G to D never
# happens.

# %%
print(replay_figures(drop={"D"})["fig2"])

# %% [markdown]
# With approach 1 the requester ignores latency; both hops have counter 0 and
# B was learned last, so seg 1 goes via B.

# %%
print([str(t) for t in run_fixture(approach=1).transmissions if t.segment == 1])
