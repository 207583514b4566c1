"""Network topology, canonical link order, and the link adjacency graph."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import TopologyError


@dataclass(frozen=True)
class Topology:
    """Nodes plus an ordered list of directed links.

    The position of a link in ``links`` is its canonical index: the order in
    which link values are coded within a time bin, the column order of traffic
    tensors, and the stream order inside compressed containers. It must be
    identical on the compressing and decompressing side, which is why it is
    pinned to the order of appearance in the topology file.
    """

    nodes: tuple[str, ...]
    links: tuple[tuple[str, str], ...]
    name: str = "unnamed"

    def __post_init__(self):
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise TopologyError("duplicate node id")
        seen = set()
        for src, dst in self.links:
            if src not in node_set or dst not in node_set:
                raise TopologyError(f"link ({src}, {dst}) references unknown node")
            if (src, dst) in seen:
                raise TopologyError(f"duplicate link ({src}, {dst})")
            seen.add((src, dst))

    @property
    def num_links(self) -> int:
        return len(self.links)

    def link_ids(self) -> list[str]:
        return [f"{src}>{dst}" for src, dst in self.links]

    def canonical_text(self) -> str:
        lines = [f"node {n}" for n in self.nodes]
        lines += [f"link {s} {d}" for s, d in self.links]
        return "\n".join(lines) + "\n"

    def topology_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_text().encode()).digest()

    def link_order_hash(self) -> bytes:
        return hashlib.sha256("\n".join(self.link_ids()).encode()).digest()


@dataclass(frozen=True)
class LinkGraph:
    """Adjacency over link indices: the substrate for message passing."""

    num_links: int
    neighbors: tuple[tuple[int, ...], ...]

    def degree(self, link: int) -> int:
        return len(self.neighbors[link])


def build_link_graph(topology: Topology) -> LinkGraph:
    """Neighbor two directed links iff they share at least one endpoint node.

    The rule is symmetric by construction and excludes self-loops. Output is a
    pure function of the topology: identical input gives an identical graph.
    """
    if topology.num_links == 0:
        raise TopologyError("topology has no links")
    incident: dict[str, list[int]] = {}
    for idx, (src, dst) in enumerate(topology.links):
        incident.setdefault(src, []).append(idx)
        if dst != src:
            incident.setdefault(dst, []).append(idx)
    neighbor_sets: list[set[int]] = [set() for _ in range(topology.num_links)]
    for members in incident.values():
        for i in members:
            neighbor_sets[i].update(members)
    for idx, s in enumerate(neighbor_sets):
        s.discard(idx)
    return LinkGraph(
        num_links=topology.num_links,
        neighbors=tuple(tuple(sorted(s)) for s in neighbor_sets),
    )


def parse_topology(text: str, name: str = "unnamed") -> Topology:
    """Parse the line-oriented topology format.

    Records: ``node <id>`` and ``link <src> <dst>``; ``name <id>`` is
    optional; ``#`` starts a comment. Record order is significant - it fixes
    the canonical link order.
    """
    nodes: list[str] = []
    links: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "node":
            if len(parts) != 2:
                raise TopologyError(f"line {lineno}: expected 'node <id>'")
            nodes.append(parts[1])
        elif kind == "link":
            if len(parts) != 3:
                raise TopologyError(f"line {lineno}: expected 'link <src> <dst>'")
            links.append((parts[1], parts[2]))
        elif kind == "name":
            if len(parts) != 2:
                raise TopologyError(f"line {lineno}: expected 'name <id>'")
            name = parts[1]
        else:
            raise TopologyError(f"line {lineno}: unknown record '{kind}'")
    if not nodes:
        raise TopologyError("topology defines no nodes")
    return Topology(nodes=tuple(nodes), links=tuple(links), name=name)


def load_topology(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = getattr(path, "stem", None)
    if name is None:
        name = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_topology(text, name=name)


def save_topology(topology: Topology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"name {topology.name}\n")
        fh.write(topology.canonical_text())
