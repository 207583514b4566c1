"""Topologies, canonical link order, and the link adjacency graph.

Directed links are the unit everything else indexes: tensor columns, coding
order inside a time bin, payload streams. Two links neighbor each other when
they share an endpoint node; those neighborhoods are what the network-wide
predictor passes messages over.
"""

from collections import Counter

from trafficzip import build_link_graph
from trafficzip.topologies import nsfnet

topology = nsfnet()
print(f"topology {topology.name}: {len(topology.nodes)} nodes, {topology.num_links} directed links")
print("first links in canonical order:", topology.link_ids()[:4])

graph = build_link_graph(topology)
degrees = Counter(graph.degree(i) for i in range(graph.num_links))
print("link-graph degree histogram:", dict(sorted(degrees.items())))

# the relation is symmetric and never includes the link itself
for i, neighbors in enumerate(graph.neighbors):
    assert i not in neighbors
    assert all(i in graph.neighbors[j] for j in neighbors)
print("neighbor relation: symmetric, no self-loops")

print("topology hash:", topology.topology_hash().hex()[:16], "...")
print("link-order hash:", topology.link_order_hash().hex()[:16], "...")
