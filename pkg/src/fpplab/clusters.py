"""Open-cluster decomposition and size statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeBox, Vertex
from .randomfield import Configuration
from .geometry import _open_vertex_labels, _require_box_inside


@dataclass(frozen=True)
class ClusterDecomposition:
    """Vertex clusters induced by open edges inside a box.

    Component ids are deterministic: clusters are numbered by their
    smallest contained vertex in row-major order.  Isolated vertices are
    size-1 clusters; sizes always sum to the vertex count.
    """

    box: LatticeBox
    labels: np.ndarray  # shape (height+1, width+1)
    sizes: np.ndarray  # size per component id

    def component_id(self, v: Vertex) -> int:
        if not self.box.contains_vertex(v):
            raise ValueError(f"{v} outside {self.box}")
        return int(self.labels[v[1] - self.box.y_min, v[0] - self.box.x_min])

    def component_size(self, v: Vertex) -> int:
        return int(self.sizes[self.component_id(v)])

    def component_count(self) -> int:
        return len(self.sizes)


def open_clusters(config: Configuration, box: LatticeBox | None = None) -> ClusterDecomposition:
    """Decompose the box vertices into open-edge connected clusters."""
    if box is None:
        box = config.box
    raw = _open_vertex_labels(config, box)
    flat = raw.ravel()
    # renumber by first appearance in row-major order
    _, first_idx = np.unique(flat, return_index=True)
    order = np.argsort(first_idx)
    remap = np.empty(len(order), dtype=np.int64)
    remap[flat[np.sort(first_idx)]] = np.arange(len(order))
    labels = remap[flat].reshape(raw.shape)
    sizes = np.bincount(labels.ravel())
    labels.setflags(write=False)
    sizes.setflags(write=False)
    return ClusterDecomposition(box, labels, sizes)


def largest_cluster_size(config: Configuration, box: LatticeBox | None = None) -> int:
    """Vertex count of the largest open cluster (size only; ties are
    irrelevant to the statistic)."""
    return int(open_clusters(config, box).sizes.max())


def boundary_connected_sizes(
    config: Configuration, box: LatticeBox, subside: int
) -> list[int]:
    """Per-tile counts of vertices joined to the tile boundary openly.

    The box is tiled by squares of side ``subside`` anchored at the lower
    left corner; the last tile in each direction is truncated.  Each
    count uses only open paths inside its own tile.  Tiles are reported
    row-major (y outer, x inner).
    """
    if subside < 1:
        raise ValueError("subside must be positive")
    _require_box_inside(config, box)

    def starts(lo: int, hi: int) -> list[tuple[int, int]]:
        out = []
        a = lo
        while True:
            b = min(a + subside, hi)
            out.append((a, b))
            if b >= hi:
                return out
            a = b

    counts: list[int] = []
    for y0, y1 in starts(box.y_min, box.y_max):
        for x0, x1 in starts(box.x_min, box.x_max):
            tile = LatticeBox(x0, x1, y0, y1)
            labels = _open_vertex_labels(config, tile)
            edge_labels = np.unique(
                np.concatenate(
                    [labels[0, :], labels[-1, :], labels[1:-1, 0], labels[1:-1, -1]]
                )
            )
            counts.append(int(np.isin(labels, edge_labels).sum()))
    return counts
