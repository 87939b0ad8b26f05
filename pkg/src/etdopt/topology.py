"""Bidirectional connected communication graphs for multi-agent runs.

Agents are numbered 1..N in configs, documentation and the public API
(internal arrays are 0-based). Edges are unordered pairs with binary
weights; the graph must be connected and free of self-loops.
"""

import numpy as np

__all__ = [
    "Topology",
    "build_topology",
    "neighbors",
    "ring_edges",
    "DisconnectedGraphError",
    "SelfLoopError",
    "IndexOutOfRangeError",
]


class DisconnectedGraphError(ValueError):
    """Raised when the supplied edge set does not connect all agents."""


class SelfLoopError(ValueError):
    """Raised when an edge connects an agent to itself."""


class IndexOutOfRangeError(IndexError):
    """Raised when an agent index falls outside 1..n_agents."""


class Topology:
    """Validated bidirectional connected graph over ``n_agents`` nodes.

    Immutable after construction; safe for concurrent reads. Use
    :func:`build_topology` to construct (it runs all validation).

    Attributes:
        n_agents: number of agents N (>= 2).
        edges: frozenset of normalized (i, j) pairs with i < j, 1-based.
        adjacency: read-only (N, N) float array with entries in {0, 1},
            symmetric, zero diagonal.
    """

    __slots__ = ("n_agents", "edges", "adjacency")

    def __init__(self, n_agents: int, edges: frozenset, adjacency: np.ndarray):
        self.n_agents = n_agents
        self.edges = edges
        adjacency.setflags(write=False)
        self.adjacency = adjacency

    def neighbor_indices(self, i: int) -> np.ndarray:
        """0-based neighbor row for 0-based agent index ``i`` (internal use)."""
        return np.nonzero(self.adjacency[i])[0]

    def degree(self, i: int) -> int:
        """Number of neighbors of 1-based agent ``i``."""
        _check_index(i, self.n_agents)
        return int(self.adjacency[i - 1].sum())

    def __repr__(self) -> str:
        return f"Topology(n_agents={self.n_agents}, edges={sorted(self.edges)})"


def _check_index(i: int, n_agents: int) -> None:
    if not 1 <= i <= n_agents:
        raise IndexOutOfRangeError(
            f"agent index {i} outside 1..{n_agents}"
        )


def build_topology(n_agents: int, edges) -> Topology:
    """Build and validate a Topology from 1-based edge pairs.

    Args:
        n_agents: number of agents, >= 2.
        edges: iterable of (i, j) pairs, 1-based, order within a pair
            irrelevant; duplicates collapse.

    Raises:
        SelfLoopError: an edge (i, i) was supplied.
        IndexOutOfRangeError: an endpoint outside 1..n_agents.
        DisconnectedGraphError: some agent is unreachable from agent 1
            (breadth-first search).
    """
    if n_agents < 2:
        raise ValueError(f"need at least 2 agents, got {n_agents}")

    normalized = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise SelfLoopError(f"self-loop on agent {i}")
        _check_index(i, n_agents)
        _check_index(j, n_agents)
        normalized.add((min(i, j), max(i, j)))

    adjacency = np.zeros((n_agents, n_agents))
    for i, j in normalized:
        adjacency[i - 1, j - 1] = 1.0
        adjacency[j - 1, i - 1] = 1.0

    _check_connected(adjacency, n_agents)
    return Topology(n_agents, frozenset(normalized), adjacency)


def _check_connected(adjacency: np.ndarray, n_agents: int) -> None:
    """BFS from node 0; every node must be reachable."""
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.nonzero(adjacency[u])[0]:
                v = int(v)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    if len(seen) != n_agents:
        missing = sorted(set(range(1, n_agents + 1)) - {u + 1 for u in seen})
        raise DisconnectedGraphError(
            f"graph is not connected, agents {missing} unreachable from agent 1"
        )


def neighbors(topology: Topology, i: int) -> set:
    """Neighbor set of 1-based agent ``i`` (1-based indices)."""
    _check_index(i, topology.n_agents)
    return {int(j) + 1 for j in topology.neighbor_indices(i - 1)}


def ring_edges(n_agents: int) -> list:
    """Edges of the n-agent ring 1-2-...-n-1 (the default layout for demos)."""
    return [(i, i % n_agents + 1) for i in range(1, n_agents + 1)]
