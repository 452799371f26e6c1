# # Names, MAC addresses and the node tables
#
# Every vehicle keeps the three usual NDN tables. The difference here is that
# PIT downstreams and FIB next hops are MAC addresses, so a node can address
# a frame to one particular neighbour.

# %%
from vndnsim.link import BROADCAST, ContentName, parse_mac, segment_count
from vndnsim.tables import ContentStore, Fib, Pit, select_next_hop

# %% [markdown]
# MAC addresses parse from and render to the usual colon form.

# %%
a = parse_mac("00:00:00:00:00:01")
print(a, a.octets, a.is_broadcast)
print(BROADCAST, BROADCAST.is_broadcast)

# %% [markdown]
# Content is fetched segment by segment. The default 1.752 MB object at
# 1024-byte segments gives this many names:

# %%
print(segment_count())
name = ContentName.parse("/content/seg=3")
print(name, name.prefix)

# %% [markdown]
# ## PIT
#
# The first arrival creates an entry; later arrivals aggregate into it.

# %%
pit = Pit()
print(pit.upsert(name, a, now_ms=0.0, lifetime_ms=4000))
print(pit.upsert(name, parse_mac("00:00:00:00:00:07"), now_ms=5.0, lifetime_ms=4000))
print([str(m) for m in pit.get(name).in_records])
print(pit.expire(4005.0))

# %% [markdown]
# ## FIB and the three next-hop choices
#
# Each next hop carries the last measured latency and a counter of how often
# it was picked.

# %%
def two_hops():
    fib = Fib()
    fib.upsert_next_hop("/content", parse_mac("00:00:00:00:00:02"), 100.0)
    fib.upsert_next_hop("/content", parse_mac("00:00:00:00:00:05"), 50.0)
    return fib


for approach in (1, 2, 3):
    entry = two_hops().entry("/content")
    picks = [str(select_next_hop(entry, approach)) for _ in range(4)]
    print(approach, picks)

# %% [markdown]
# Approach 1 alternates (lowest counter), approach 2 always takes the fastest
# hop, approach 3 balances counters and breaks ties on latency.

# %%
fib = two_hops()
select_next_hop(fib.entry("/content"), 3)
print(fib.dump())

# %% [markdown]
# ## Content Store
#
# A FIFO cache keyed by exact name.

# %%
from vndnsim.link import DataMsg

cs = ContentStore(capacity=2)
for seg in range(3):
    evicted = cs.insert(DataMsg(ContentName(("content",), seg), 1024), float(seg))
    print(seg, evicted)
print([str(n) for n in cs.names()])
