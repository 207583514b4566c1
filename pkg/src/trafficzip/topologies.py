"""Built-in benchmark topologies.

NSFNet is the classic 14-node research backbone (21 bidirectional edges, 42
directional links). The Abilene- and Geant-sized topologies reproduce the
link counts of the well-known public traffic datasets (30 and 72 directional
links) for benchmarks that run without those datasets on disk.
"""

from __future__ import annotations

from .topology import Topology

_NSFNET_EDGES = [
    (0, 1), (0, 2), (0, 3), (1, 2), (1, 7), (2, 5), (3, 4), (3, 10),
    (4, 5), (4, 6), (5, 9), (5, 13), (6, 7), (7, 8), (8, 9), (8, 11),
    (8, 12), (10, 11), (10, 13), (11, 12), (12, 13),
]

_ABILENE_EDGES = [
    (0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6),
    (5, 6), (5, 7), (6, 8), (7, 8), (7, 9), (8, 10), (9, 11),
]

_GEANT_EDGES = [
    (0, 1), (0, 2), (1, 3), (1, 4), (2, 3), (2, 5), (3, 6), (4, 7),
    (4, 8), (5, 6), (5, 9), (6, 10), (7, 10), (7, 11), (8, 9), (8, 12),
    (9, 13), (10, 14), (11, 15), (11, 16), (12, 13), (12, 17), (13, 18),
    (14, 15), (14, 19), (15, 20), (16, 17), (16, 21), (17, 18), (18, 19),
    (19, 20), (20, 21), (2, 14), (6, 13), (9, 21), (5, 19),
]


def _from_edges(name: str, num_nodes: int, edges) -> Topology:
    nodes = tuple(f"n{i}" for i in range(num_nodes))
    links = []
    for a, b in edges:
        links.append((nodes[a], nodes[b]))
        links.append((nodes[b], nodes[a]))
    return Topology(nodes=nodes, links=tuple(links), name=name)


def nsfnet() -> Topology:
    """14 nodes, 42 directional links."""
    return _from_edges("nsfnet", 14, _NSFNET_EDGES)


def abilene_like() -> Topology:
    """12 nodes, 30 directional links (Abilene-sized)."""
    return _from_edges("abilene-like", 12, _ABILENE_EDGES)


def geant_like() -> Topology:
    """22 nodes, 72 directional links (Geant-sized)."""
    return _from_edges("geant-like", 22, _GEANT_EDGES)


def directed_ring(num_nodes: int) -> Topology:
    """Ring with both directions per edge; vertex-transitive test graph."""
    nodes = tuple(f"n{i}" for i in range(num_nodes))
    links = []
    for i in range(num_nodes):
        j = (i + 1) % num_nodes
        links.append((nodes[i], nodes[j]))
        links.append((nodes[j], nodes[i]))
    return Topology(nodes=nodes, links=tuple(links), name=f"ring{num_nodes}")


def chain(num_nodes: int) -> Topology:
    """Bidirectional path graph."""
    nodes = tuple(f"n{i}" for i in range(num_nodes))
    links = []
    for i in range(num_nodes - 1):
        links.append((nodes[i], nodes[i + 1]))
        links.append((nodes[i + 1], nodes[i]))
    return Topology(nodes=nodes, links=tuple(links), name=f"chain{num_nodes}")


BUILTIN = {
    "nsfnet": nsfnet,
    "abilene-like": abilene_like,
    "geant-like": geant_like,
}
