# # Calling the strategy handlers directly
#
# The handlers take a node, a frame and the time, update the node's tables
# and return the frames to send. No simulator is needed to try them.

# %%
import random

from vndnsim import forwarding as fw
from vndnsim.link import BROADCAST, DataMsg, Frame, InterestMsg, MacAddress, ContentName


def relay(mac, kind="immm"):
    return fw.NodeState(node_id=mac, interfaces=[fw.Interface(MacAddress.from_int(mac), 172)],
                        strategy=fw.Strategy(kind, approach=3), rng=random.Random(0))


A, B, D, G = (MacAddress.from_int(i) for i in (1, 2, 3, 4))
seg0 = ContentName(("content",), 0)

# %% [markdown]
# A broadcast Interest at a relay with an empty FIB is flooded on.

# %%
d = relay(3)
out = fw.on_interest(d, Frame(B, BROADCAST, 172, InterestMsg(seg0, 4000, nonce=11)), now_ms=0.0)
print([o.frame.describe() for o in out])

# %% [markdown]
# A Data frame addressed to D: D learns G as next hop, caches the Data and
# unicasts it to B.

# %%
out = fw.on_data(d, Frame(G, D, 172, DataMsg(seg0, 1024)), now_ms=3.2)
print([o.frame.describe() for o in out])
print(d.fib.dump())
print(seg0 in d.cs, len(d.pit))

# %% [markdown]
# With a route in the FIB, the next Interest is unicast.

# %%
seg1 = ContentName(("content",), 1)
out = fw.on_interest(d, Frame(B, D, 172, InterestMsg(seg1, 4000, nonce=12)), now_ms=100.0)
print([o.frame.describe() for o in out])

# %% [markdown]
# Data overheard for a pending name (addressed elsewhere) only teaches a
# next hop.

# %%
d2 = relay(3)
fw.on_interest(d2, Frame(B, BROADCAST, 172, InterestMsg(seg0, 4000, nonce=1)), 0.0)
print(fw.on_data(d2, Frame(G, MacAddress.from_int(9), 172, DataMsg(seg0, 1024)), 2.0))
print(d2.fib.dump())

# %% [markdown]
# ## The variants
#
# MMM puts the origin/target MACs inside the message and always broadcasts.

# %%
m = relay(3, "mmm")
m.fib.upsert_next_hop(("content",), G, 1.0)
body = InterestMsg(seg1, 4000, 5, variant_header=(B, MacAddress.from_int(3)))
out = fw.on_interest(m, Frame(B, BROADCAST, 172, body), 0.0)
f = out[0].frame
print(f.dst_mac, f.body.variant_header, f.size_bytes)

# %% [markdown]
# CODIE bounds Data forwarding with the hop count the Interest needed.

# %%
for budget, traveled in [(3, 2), (3, 3), (0, 1)]:
    print(budget, traveled, fw.codie_data_gate(None, DataMsg(seg0, 1024, budget), traveled))
