"""Task-aware edge subsampling of a single layer graph."""

from __future__ import annotations

import enum

from .lsg import Edge, Graph, Observational, Symbolic, Traversability


class TaskMode(str, enum.Enum):
    PATH_FINDING = "path-finding"
    ANOMALY_DETECTION = "anomaly-detection"
    SCENE_UNDERSTANDING = "scene-understanding"


# one edge tag per task mode
MODE_FILTER = {
    TaskMode.PATH_FINDING: Traversability,
    TaskMode.ANOMALY_DETECTION: Observational,
    TaskMode.SCENE_UNDERSTANDING: Symbolic,
}


class Subgraph:
    """View over a parent graph that keeps every node and only the edges of one tag.

    Blocked traversability edges stay in the view; searches skip them by
    consulting the parent's live blocked set.
    """

    def __init__(self, parent: Graph, mode: TaskMode, edge_indices):
        self.parent = parent
        self.mode = TaskMode(mode)
        self.edge_indices = tuple(edge_indices)
        self._adjacency = None

    def __repr__(self):
        return (
            f"Subgraph({self.parent.layer.name}, mode={self.mode.value}, "
            f"nodes={len(self.parent.nodes)}, edges={len(self.edge_indices)})"
        )

    @property
    def layer(self):
        return self.parent.layer

    @property
    def nodes(self):
        return self.parent.nodes

    @property
    def blocked(self):
        return self.parent.blocked

    @property
    def edges(self) -> list[Edge]:
        return [self.parent.edges[i] for i in self.edge_indices]

    def __len__(self):
        return len(self.edge_indices)

    def as_graph(self) -> Graph:
        return Graph(self.parent.layer, self.parent.nodes, self.edges)

    def adjacency(self) -> dict:
        """Same entry layout as :meth:`Graph.adjacency`, restricted to retained edges."""
        if self._adjacency is None:
            adj = {n: [] for n in self.parent.nodes}
            for i in self.edge_indices:
                e = self.parent.edges[i]
                trav = isinstance(e.attr, Traversability)
                w = self.parent.edge_weight(i) if trav else 0.0
                adj[e.u].append((e.v, w, i, trav))
                adj[e.v].append((e.u, w, i, trav))
            self._adjacency = adj
        return self._adjacency


def extract_domain_subgraph(g: Graph, mode: TaskMode = TaskMode.PATH_FINDING) -> Subgraph:
    keep = MODE_FILTER[TaskMode(mode)]
    return Subgraph(g, mode, [i for i, e in enumerate(g.edges) if type(e.attr) is keep])
