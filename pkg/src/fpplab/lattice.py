"""Square-lattice and dual-lattice geometry.

Vertices are plain ``(x, y)`` integer tuples.  Edges are identified by
orientation plus their lower-left anchor vertex, which gives every edge a
unique representation:

* ``Edge('H', x, y)`` joins ``(x, y)`` and ``(x + 1, y)``;
* ``Edge('V', x, y)`` joins ``(x, y)`` and ``(x, y + 1)``.

Dual vertices live at half-integer coordinates.  To keep all geometry in
exact integer arithmetic they are stored with doubled coordinates, so the
dual vertex ``(x + 1/2, y + 1/2)`` is represented as ``(2x + 1, 2y + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

Vertex = tuple[int, int]

HORIZONTAL = "H"
VERTICAL = "V"

#: Neighbor offsets in the fixed enumeration order used everywhere
#: (east, north, west, south).
NEIGHBOR_STEPS: tuple[Vertex, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


class Edge(NamedTuple):
    orientation: str
    x: int
    y: int


class DualEdge(NamedTuple):
    """Dual edge with anchor stored in doubled (exact) coordinates."""

    orientation: str
    x2: int
    y2: int


def edge_endpoints(edge: Edge) -> tuple[Vertex, Vertex]:
    """Both endpoints of an edge, anchor first."""
    if edge.orientation == HORIZONTAL:
        return (edge.x, edge.y), (edge.x + 1, edge.y)
    if edge.orientation == VERTICAL:
        return (edge.x, edge.y), (edge.x, edge.y + 1)
    raise ValueError(f"bad orientation {edge.orientation!r}")


def edge_between(u: Vertex, v: Vertex) -> Edge:
    """The unique edge joining two unit-distance neighbors."""
    dx, dy = v[0] - u[0], v[1] - u[1]
    if (dx, dy) == (1, 0):
        return Edge(HORIZONTAL, u[0], u[1])
    if (dx, dy) == (-1, 0):
        return Edge(HORIZONTAL, v[0], v[1])
    if (dx, dy) == (0, 1):
        return Edge(VERTICAL, u[0], u[1])
    if (dx, dy) == (0, -1):
        return Edge(VERTICAL, v[0], v[1])
    raise ValueError(f"{u} and {v} are not lattice neighbors")


def dual_of(edge: Edge) -> DualEdge:
    """The dual edge bisecting ``edge`` perpendicularly at its midpoint.

    A horizontal edge ``(x,y)-(x+1,y)`` is crossed by the vertical dual
    edge joining ``(x+1/2, y-1/2)`` and ``(x+1/2, y+1/2)``; a vertical
    edge by the horizontal dual edge joining ``(x-1/2, y+1/2)`` and
    ``(x+1/2, y+1/2)``.  Anchors are the lower/left dual endpoints in
    doubled coordinates.
    """
    if edge.orientation == HORIZONTAL:
        return DualEdge(VERTICAL, 2 * edge.x + 1, 2 * edge.y - 1)
    if edge.orientation == VERTICAL:
        return DualEdge(HORIZONTAL, 2 * edge.x - 1, 2 * edge.y + 1)
    raise ValueError(f"bad orientation {edge.orientation!r}")


def primal_of(dual: DualEdge) -> Edge:
    """Inverse of :func:`dual_of`; together they form an involution."""
    if dual.orientation == VERTICAL:
        return Edge(HORIZONTAL, (dual.x2 - 1) // 2, (dual.y2 + 1) // 2)
    if dual.orientation == HORIZONTAL:
        return Edge(VERTICAL, (dual.x2 + 1) // 2, (dual.y2 - 1) // 2)
    raise ValueError(f"bad orientation {dual.orientation!r}")


@dataclass(frozen=True)
class LatticeBox:
    """Closed axis-aligned box of lattice vertices.

    Boundary vertices belong to the box; an edge belongs to the box iff
    both endpoints do.
    """

    x_min: int
    x_max: int
    y_min: int
    y_max: int

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"empty box {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    def vertex_count(self) -> int:
        return (self.width + 1) * (self.height + 1)

    def edge_count(self) -> int:
        return self.width * (self.height + 1) + (self.width + 1) * self.height

    def contains_vertex(self, v: Vertex) -> bool:
        return self.x_min <= v[0] <= self.x_max and self.y_min <= v[1] <= self.y_max

    def contains_edge(self, e: Edge) -> bool:
        a, b = edge_endpoints(e)
        return self.contains_vertex(a) and self.contains_vertex(b)

    def contains_box(self, other: "LatticeBox") -> bool:
        return (
            self.x_min <= other.x_min
            and other.x_max <= self.x_max
            and self.y_min <= other.y_min
            and other.y_max <= self.y_max
        )

    def vertices(self) -> Iterator[Vertex]:
        """Row-major vertex enumeration (y outer, x inner)."""
        for y in range(self.y_min, self.y_max + 1):
            for x in range(self.x_min, self.x_max + 1):
                yield (x, y)

    def edges(self) -> Iterator[Edge]:
        """Canonical edge order: all horizontal edges row-major, then all
        vertical edges row-major."""
        for y in range(self.y_min, self.y_max + 1):
            for x in range(self.x_min, self.x_max):
                yield Edge(HORIZONTAL, x, y)
        for y in range(self.y_min, self.y_max):
            for x in range(self.x_min, self.x_max + 1):
                yield Edge(VERTICAL, x, y)

    def boundary_vertices(self) -> Iterator[Vertex]:
        for y in range(self.y_min, self.y_max + 1):
            for x in range(self.x_min, self.x_max + 1):
                if (
                    x in (self.x_min, self.x_max)
                    or y in (self.y_min, self.y_max)
                ):
                    yield (x, y)

    def is_boundary_vertex(self, v: Vertex) -> bool:
        return self.contains_vertex(v) and (
            v[0] in (self.x_min, self.x_max) or v[1] in (self.y_min, self.y_max)
        )

    @staticmethod
    def centered(half_width: int, center: Vertex = (0, 0)) -> "LatticeBox":
        cx, cy = center
        return LatticeBox(cx - half_width, cx + half_width, cy - half_width, cy + half_width)


@dataclass(frozen=True)
class Annulus:
    """Region between two concentric boxes.

    The annulus vertex set is ``outer`` minus all of ``inner`` (inner
    boundary vertices excluded); an edge belongs to the annulus iff both
    endpoints do.
    """

    outer: LatticeBox
    inner: LatticeBox

    def __post_init__(self) -> None:
        o, i = self.outer, self.inner
        if not (
            o.x_min < i.x_min
            and i.x_max < o.x_max
            and o.y_min < i.y_min
            and i.y_max < o.y_max
        ):
            raise ValueError("inner box must be strictly contained in outer box")
        if (o.x_min + o.x_max, o.y_min + o.y_max) != (
            i.x_min + i.x_max,
            i.y_min + i.y_max,
        ):
            raise ValueError("annulus boxes must share a center")

    def contains_vertex(self, v: Vertex) -> bool:
        return self.outer.contains_vertex(v) and not self.inner.contains_vertex(v)

    def contains_edge(self, e: Edge) -> bool:
        a, b = edge_endpoints(e)
        return self.contains_vertex(a) and self.contains_vertex(b)


def base_scale(n: int, delta1: float) -> int:
    """Dyadic base scale: ``n**(1 - delta1)`` rounded half-up, floor 1."""
    if not 0.0 < delta1 < 1.0:
        raise ValueError("delta1 must lie in (0, 1)")
    return max(1, int(n ** (1.0 - delta1) + 0.5))


def annulus_sequence(n: int, delta1: float) -> list[Annulus]:
    """Concentric dyadic annuli between the base scale and scale ``n``.

    With base scale ``s`` the i-th annulus is the region between the boxes
    of half-width ``2**(i-1) * s`` and ``2**i * s``; the count ``k`` is the
    largest index with ``2**k * s <= n``, so ``k = O(log n)``.

    Raises ``ValueError`` when the parameters yield fewer than three
    annuli, which is too small to host the crossing events built on them.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    s = base_scale(n, delta1)
    k = 0
    while (2 ** (k + 1)) * s <= n:
        k += 1
    if k < 3:
        raise ValueError(
            f"annulus count k={k} < 3 for n={n}, delta1={delta1} (base scale {s})"
        )
    out = []
    for i in range(1, k + 1):
        out.append(
            Annulus(
                outer=LatticeBox.centered((2**i) * s),
                inner=LatticeBox.centered((2 ** (i - 1)) * s),
            )
        )
    return out


class LatticePath:
    """Self-avoiding lattice path given by its vertex sequence.

    Consecutive vertices must be unit-distance neighbors.  An open path
    repeats no vertex; a circuit repeats exactly its first vertex at the
    end and nothing else.  A single-vertex path (no edges) is allowed.
    """

    __slots__ = ("vertices", "edges", "closed")

    def __init__(self, vertices: Sequence[Vertex]):
        verts = tuple((int(x), int(y)) for x, y in vertices)
        if not verts:
            raise ValueError("path needs at least one vertex")
        edges = []
        for u, v in zip(verts, verts[1:]):
            edges.append(edge_between(u, v))
        closed = len(verts) >= 2 and verts[0] == verts[-1]
        core = verts[:-1] if closed else verts
        if len(set(core)) != len(core):
            raise ValueError("path revisits a vertex")
        if closed and len(core) < 4:
            raise ValueError("circuit needs at least four distinct vertices")
        self.vertices = verts
        self.edges = tuple(edges)
        self.closed = closed

    def __len__(self) -> int:
        """Edge count."""
        return len(self.edges)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LatticePath) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        kind = "Circuit" if self.closed else "LatticePath"
        return f"{kind}({self.vertices[0]}..{self.vertices[-1]}, {len(self)} edges)"

    @property
    def start(self) -> Vertex:
        return self.vertices[0]

    @property
    def end(self) -> Vertex:
        return self.vertices[-1]

    def vertex_set(self) -> frozenset[Vertex]:
        return frozenset(self.vertices)

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def to_text(self) -> str:
        """One ``x y`` line per vertex; fixture exchange format."""
        return "\n".join(f"{x} {y}" for x, y in self.vertices)

    @staticmethod
    def from_text(text: str) -> "LatticePath":
        verts = []
        for line in text.strip().splitlines():
            xs, ys = line.split()
            verts.append((int(xs), int(ys)))
        return LatticePath(verts)


def circuit(vertices: Sequence[Vertex]) -> LatticePath:
    """Build a closed path, appending the starting vertex if needed."""
    verts = list(vertices)
    if verts and verts[0] != verts[-1]:
        verts.append(verts[0])
    path = LatticePath(verts)
    if not path.closed:
        raise ValueError("not a circuit")
    return path


def path_passage_time(path: LatticePath, config) -> int:
    """Sum of edge weights along ``path`` in ``config``.

    Returns an exact number (``int`` or ``Fraction`` depending on the
    configuration's weight scale); the empty path sums to zero.
    """
    total = 0
    for e in path.edges:
        total += config.weight_scaled(e)
    return config.unscale(total)
