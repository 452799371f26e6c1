# # Mobility models
#
# Positions come from a fixed placement, a CSV trace, or the synthetic
# Manhattan grid (1 km x 1 km, 250 m blocks, 12-18 m/s).

# %%
import io

import numpy as np

from vndnsim.mobility import generate_manhattan, parse_trace

grid = generate_manhattan(20, seed=1)
print(len(grid.node_ids), grid.node_ids[:3])
print(np.mean(list(grid.speeds.values())))

# %% [markdown]
# Where the first three cars are at a few instants.

# %%
for t in (0.0, 10.0, 20.0):
    print(t, [tuple(round(c, 1) for c in grid.position_at(n, t)) for n in grid.node_ids[:3]])

# %% [markdown]
# How many neighbours each car has within 250 m, averaged over the run.
# This is what decides whether a multihop path exists at all.

# %%
def mean_degree(model, t_values, range_m=250.0):
    degs = []
    for t in t_values:
        xy, present = model.positions_at(model.node_ids, t)
        d = np.hypot(*(xy[:, None, :] - xy[None, :, :]).transpose(2, 0, 1))
        degs.append(((d <= range_m).sum(axis=1) - 1).mean())
    return float(np.mean(degs))


for n in (20, 60, 100):
    print(n, round(mean_degree(generate_manhattan(n, seed=1), np.linspace(0, 149, 30)), 2))

# %% [markdown]
# ## CSV traces
#
# Export and re-import round-trips exactly.

# %%
buf = io.StringIO()
generate_manhattan(3, seed=5, horizon_s=5.0).to_csv(buf)
print(buf.getvalue()[:300])
back = parse_trace(buf.getvalue().splitlines())
print(back.position_at("car0", 2.5))

# %% [markdown]
# Nodes do not exist before their first trace point.

# %%
late = parse_trace(["0,a,0,0", "5,b,10,0", "10,b,110,0"])
print(late.position_at("b", 1.0), late.position_at("b", 7.5))
