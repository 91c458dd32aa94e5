"""Critical-percolation geometry: crossings, circuits, and square events.

Circuit questions run on a face grid: the unit squares of a box extended
by one exterior ring, indexed ``[row, col]``.  Dual connectivity between
neighboring faces is blocked exactly by the primal edge separating them,
which turns circuit existence and extremal-circuit extraction into
connected-component queries that scipy answers in compiled code.

The lowest left-right crossing is traced with a right-hand wall-following
walk along the lower shore of the spanning open cluster, starting from
its lowest left-side contact; loop-erasing the walk yields the crossing
whose lower region is minimal.  ``verify_three_arm`` checks the result
independently: a crossing is lowest exactly when each of its edges is an
essential left-right cut edge of the open subgraph on its lower region,
which is the computational content of the three-arm property (the closed
dual blocking structure below the crossing pins every edge).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .lattice import (
    HORIZONTAL,
    VERTICAL,
    Annulus,
    Edge,
    LatticeBox,
    LatticePath,
    Vertex,
    base_scale,
    edge_endpoints,
)
from .randomfield import Configuration

LEFT_RIGHT = "LR"
TOP_BOTTOM = "TB"

_INNERMOST = "innermost"
_OUTERMOST = "outermost"


# ---------------------------------------------------------------------------
# weight gathering helpers

def _gather_h(config: Configuration, x0: int, x1: int, y0: int, y1: int) -> np.ndarray:
    """Weights of horizontal edges anchored at x in [x0, x1), y in [y0, y1].

    Entries outside the configuration box are filled with 1 (closed);
    callers mask those out via annulus membership before use.
    """
    out = np.ones((y1 - y0 + 1, x1 - x0), dtype=np.int64)
    b = config.box
    ax0, ax1 = max(x0, b.x_min), min(x1, b.x_max)
    ay0, ay1 = max(y0, b.y_min), min(y1, b.y_max)
    if ax0 < ax1 and ay0 <= ay1:
        src = config.h_weights[
            ay0 - b.y_min : ay1 - b.y_min + 1, ax0 - b.x_min : ax1 - b.x_min
        ]
        out[ay0 - y0 : ay1 - y0 + 1, ax0 - x0 : ax1 - x0] = src
    return out


def _gather_v(config: Configuration, x0: int, x1: int, y0: int, y1: int) -> np.ndarray:
    """Weights of vertical edges anchored at x in [x0, x1], y in [y0, y1)."""
    out = np.ones((y1 - y0, x1 - x0 + 1), dtype=np.int64)
    b = config.box
    ax0, ax1 = max(x0, b.x_min), min(x1, b.x_max)
    ay0, ay1 = max(y0, b.y_min), min(y1, b.y_max)
    if ax0 <= ax1 and ay0 < ay1:
        src = config.v_weights[
            ay0 - b.y_min : ay1 - b.y_min, ax0 - b.x_min : ax1 - b.x_min + 1
        ]
        out[ay0 - y0 : ay1 - y0, ax0 - x0 : ax1 - x0 + 1] = src
    return out


def _require_box_inside(config: Configuration, box: LatticeBox) -> None:
    if not config.box.contains_box(box):
        raise ValueError(f"{box} is not inside the configuration box {config.box}")


# ---------------------------------------------------------------------------
# face-component machinery

def _face_components(v_ok: np.ndarray, h_ok: np.ndarray) -> np.ndarray:
    """Component labels of a face grid under the given step masks.

    ``v_ok[r, c]`` permits the step between rows r and r+1 in column c;
    ``h_ok[r, c]`` the step between columns c and c+1 in row r.
    """
    rows = h_ok.shape[0]
    cols = v_ok.shape[1]
    n = rows * cols
    idx = np.arange(n, dtype=np.int64).reshape(rows, cols)
    ii = []
    jj = []
    if v_ok.size:
        ii.append(idx[:-1, :][v_ok])
        jj.append(idx[1:, :][v_ok])
    if h_ok.size:
        ii.append(idx[:, :-1][h_ok])
        jj.append(idx[:, 1:][h_ok])
    if not ii:
        return np.arange(n, dtype=np.int64)
    i = np.concatenate(ii)
    j = np.concatenate(jj)
    g = coo_matrix((np.ones(len(i), dtype=np.int8), (i, j)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels.reshape(rows, cols)


def _open_vertex_labels(config: Configuration, box: LatticeBox) -> np.ndarray:
    """Open-edge connectivity labels on the vertices of ``box``."""
    _require_box_inside(config, box)
    hw = _gather_h(config, box.x_min, box.x_max, box.y_min, box.y_max)
    vw = _gather_v(config, box.x_min, box.x_max, box.y_min, box.y_max)
    rows, cols = box.height + 1, box.width + 1
    n = rows * cols
    idx = np.arange(n, dtype=np.int64).reshape(rows, cols)
    parts_i = []
    parts_j = []
    hm = hw == 0
    vm = vw == 0
    if hm.size:
        parts_i.append(idx[:, :-1][hm])
        parts_j.append(idx[:, 1:][hm])
    if vm.size:
        parts_i.append(idx[:-1, :][vm])
        parts_j.append(idx[1:, :][vm])
    if not parts_i:
        return idx
    i = np.concatenate(parts_i)
    j = np.concatenate(parts_j)
    g = coo_matrix((np.ones(len(i), dtype=np.int8), (i, j)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels.reshape(rows, cols)


# ---------------------------------------------------------------------------
# crossings

@dataclass(frozen=True)
class Crossing:
    """Open self-avoiding path joining two opposite sides of a box.

    The path touches the two designated sides only at its endpoints.
    """

    path: LatticePath
    box: LatticeBox
    direction: str

    def __post_init__(self) -> None:
        p, b = self.path, self.box
        for v in p.vertices:
            if not b.contains_vertex(v):
                raise ValueError(f"crossing vertex {v} outside {b}")
        if self.direction == LEFT_RIGHT:
            lo, hi = b.x_min, b.x_max
            coord = 0
        elif self.direction == TOP_BOTTOM:
            lo, hi = b.y_min, b.y_max
            coord = 1
        else:
            raise ValueError(f"bad direction {self.direction!r}")
        if {p.start[coord], p.end[coord]} != ({lo, hi} if lo != hi else {lo}):
            raise ValueError("crossing endpoints must lie on the two opposite sides")
        for v in p.vertices[1:-1]:
            if v[coord] in (lo, hi):
                raise ValueError("crossing interior touches an end side")

    def __len__(self) -> int:
        return len(self.path)


def has_open_crossing(config: Configuration, box: LatticeBox, direction: str) -> bool:
    """True iff an open path joins the two designated opposite sides."""
    labels = _open_vertex_labels(config, box)
    if direction == LEFT_RIGHT:
        a, b = labels[:, 0], labels[:, -1]
    elif direction == TOP_BOTTOM:
        a, b = labels[0, :], labels[-1, :]
    else:
        raise ValueError(f"bad direction {direction!r}")
    return bool(np.isin(a, b).any())


# right turn, straight, left turn, reverse relative to the heading
_TURN_ORDER = {
    (1, 0): ((0, -1), (1, 0), (0, 1), (-1, 0)),
    (0, 1): ((1, 0), (0, 1), (-1, 0), (0, -1)),
    (-1, 0): ((0, 1), (-1, 0), (0, -1), (1, 0)),
    (0, -1): ((-1, 0), (0, -1), (1, 0), (0, 1)),
}


def _loop_erased(vertices: list[Vertex]) -> list[Vertex]:
    pos: dict[Vertex, int] = {}
    out: list[Vertex] = []
    for v in vertices:
        if v in pos:
            for dropped in out[pos[v] + 1 :]:
                del pos[dropped]
            del out[pos[v] + 1 :]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def lowest_crossing(config: Configuration, box: LatticeBox) -> Crossing | None:
    """The unique lowest open left-right crossing, or ``None``.

    Starts at the lowest left-side vertex of a spanning open cluster and
    wall-follows the cluster's lower shore (right hand on the closed
    region below), stopping at the first right-side contact.  The
    loop-erased walk is the crossing with the minimal lower region; the
    oracle tests compare it against exhaustive enumeration.
    """
    _require_box_inside(config, box)
    if box.width == 0:
        # degenerate single-column box: any vertex joins the two sides
        return Crossing(LatticePath([(box.x_min, box.y_min)]), box, LEFT_RIGHT)
    labels = _open_vertex_labels(config, box)
    spanning = np.intersect1d(labels[:, 0], labels[:, -1])
    if len(spanning) == 0:
        return None
    left_rows = np.flatnonzero(np.isin(labels[:, 0], spanning))
    start = (box.x_min, box.y_min + int(left_rows[0]))

    hw = config.h_weights
    vw = config.v_weights
    cb = config.box

    def open_step(v: Vertex, d: tuple[int, int]) -> bool:
        x, y = v
        if d == (1, 0):
            return x + 1 <= box.x_max and hw[y - cb.y_min, x - cb.x_min] == 0
        if d == (-1, 0):
            return x - 1 >= box.x_min and hw[y - cb.y_min, x - 1 - cb.x_min] == 0
        if d == (0, 1):
            return y + 1 <= box.y_max and vw[y - cb.y_min, x - cb.x_min] == 0
        return y - 1 >= box.y_min and vw[y - 1 - cb.y_min, x - cb.x_min] == 0

    walk = [start]
    heading = (0, 1)  # pretend arrival from the south
    v = start
    limit = 4 * box.edge_count() + 8
    while v[0] != box.x_max:
        for d in _TURN_ORDER[heading]:
            if open_step(v, d):
                v = (v[0] + d[0], v[1] + d[1])
                heading = d
                walk.append(v)
                break
        else:
            raise AssertionError(f"shore walk stuck at {v}")
        if len(walk) > limit:
            raise AssertionError("shore walk failed to terminate")

    chain = _loop_erased(walk)
    last_left = max(i for i, u in enumerate(chain) if u[0] == box.x_min)
    chain = chain[last_left:]
    first_right = min(i for i, u in enumerate(chain) if u[0] == box.x_max)
    chain = chain[: first_right + 1]
    return Crossing(LatticePath(chain), box, LEFT_RIGHT)


def _crossing_edge_masks(crossing: Crossing, box: LatticeBox):
    nx, ny = box.width, box.height
    ch = np.zeros((ny + 1, nx), dtype=bool)
    cv = np.zeros((max(ny, 0), nx + 1), dtype=bool)
    for e in crossing.path.edges:
        if e.orientation == HORIZONTAL:
            ch[e.y - box.y_min, e.x - box.x_min] = True
        else:
            cv[e.y - box.y_min, e.x - box.x_min] = True
    return ch, cv


def _below_face_mask(crossing: Crossing, box: LatticeBox) -> np.ndarray:
    """Faces below the crossing curve (exterior bottom row included).

    Face grid rows ``height + 2`` (exterior rows below and above), blocked
    only by the crossing's own edges; the flood from the bottom exterior
    row is exactly the Jordan lower component.
    """
    nx, ny = box.width, box.height
    ch, cv = _crossing_edge_masks(crossing, box)
    v_ok = ~ch
    h_ok = np.ones((ny + 2, max(nx - 1, 0)), dtype=bool)
    if nx >= 2 and ny >= 1:
        h_ok[1:-1, :] = ~cv[:, 1:-1]
    labels = _face_components(v_ok, h_ok)
    return np.isin(labels, np.unique(labels[0, :]))


def verify_three_arm(config: Configuration, crossing: Crossing, box: LatticeBox) -> bool:
    """Independent check that a crossing is the lowest one.

    A crossing is lowest exactly when no open left-right crossing lies
    weakly below it, i.e. when every one of its edges is an essential
    left-right cut edge of the open subgraph on the edges at or below the
    curve (edges whose flanking faces all sit in the lower face region,
    plus the crossing itself).  That is the deterministic content of the
    three-arm property: below every crossing edge, closed dual structure
    reaches the line under the box and blocks every alternative.
    Computed via bridge analysis with the two box sides contracted to
    terminals; shares no logic with the shore walk that extracts the
    crossing.
    """
    _require_box_inside(config, box)
    for e in crossing.path.edges:
        if config.weight_scaled(e) != 0:
            raise ValueError(f"crossing edge {e} is not open")
    if box.width == 0 or len(crossing.path.edges) == 0:
        return True

    below = _below_face_mask(crossing, box)
    cross_edges = crossing.path.edge_set()
    rows, cols = box.height + 1, box.width + 1

    def face_below(r: int, c: int) -> bool:
        # face row r spans [y_min-1+r, y_min+r]; out-of-grid faces are the
        # wall corridors, which never veto containment
        if not (0 <= c < box.width):
            return True
        return bool(below[r, c])

    def usable(e: Edge) -> bool:
        if e in cross_edges:
            return True
        if e.orientation == HORIZONTAL:
            r = e.y - box.y_min
            c = e.x - box.x_min
            return face_below(r, c) and face_below(r + 1, c)
        r = e.y - box.y_min + 1
        c = e.x - box.x_min
        return face_below(r, c - 1) and face_below(r, c)

    def node(r: int, c: int) -> int:
        return r * cols + c

    s_node = rows * cols
    t_node = s_node + 1
    cb = config.box
    hw, vw = config.h_weights, config.v_weights
    adj: dict[int, list[tuple[int, object]]] = {s_node: [], t_node: []}

    def add(u: int, v: int, tag: object) -> None:
        adj.setdefault(u, []).append((v, tag))
        adj.setdefault(v, []).append((u, tag))

    for r in range(rows):
        y = box.y_min + r
        for c in range(cols):
            x = box.x_min + c
            if c + 1 < cols and hw[y - cb.y_min, x - cb.x_min] == 0:
                e = Edge(HORIZONTAL, x, y)
                if usable(e):
                    add(node(r, c), node(r, c + 1), e)
            if r + 1 < rows and vw[y - cb.y_min, x - cb.x_min] == 0:
                e = Edge(VERTICAL, x, y)
                if usable(e):
                    add(node(r, c), node(r + 1, c), e)
        add(s_node, node(r, 0), ("side", "L", r))
        add(t_node, node(r, cols - 1), ("side", "R", r))

    essential = _st_cut_edges(adj, s_node, t_node)
    return all(e in essential for e in crossing.path.edges)


def _st_cut_edges(adj: dict, s: int, t: int) -> set:
    """Tags of the edges lying on every s-t path.

    One iterative lowpoint sweep finds the bridges, discovery order gives
    the 2-edge-connected components, and the s-t path in the bridge tree
    selects the separating ones.  The graph must have no parallel edges.
    """
    disc: dict[int, int] = {s: 0}
    low: dict[int, int] = {s: 0}
    parent: dict[int, int | None] = {s: None}
    tag_in: dict[int, object] = {}
    order: list[int] = [s]
    bridges: list[tuple[int, int, object]] = []
    counter = 1
    stack: list[tuple[int, object]] = [(s, iter(adj.get(s, ())))]
    while stack:
        u, it = stack[-1]
        advanced = False
        for v, tag in it:
            if v == parent[u]:
                continue
            if v in disc:
                if disc[v] < low[u]:
                    low[u] = disc[v]
            else:
                disc[v] = low[v] = counter
                counter += 1
                parent[v] = u
                tag_in[v] = tag
                order.append(v)
                stack.append((v, iter(adj.get(v, ()))))
                advanced = True
                break
        if not advanced:
            stack.pop()
            if stack:
                pu = stack[-1][0]
                if low[u] < low[pu]:
                    low[pu] = low[u]
                if low[u] > disc[pu]:
                    bridges.append((pu, u, tag_in[u]))
    if t not in disc:
        return set()

    bridge_children = {u for _, u, _ in bridges}
    comp: dict[int, int] = {}
    for v in order:
        if parent[v] is None or v in bridge_children:
            comp[v] = v
        else:
            comp[v] = comp[parent[v]]

    tree: dict[int, list[tuple[int, object]]] = {}
    for a, b, tag in bridges:
        ca, cb = comp[a], comp[b]
        tree.setdefault(ca, []).append((cb, tag))
        tree.setdefault(cb, []).append((ca, tag))
    fs, ft = comp[s], comp[t]
    if fs == ft:
        return set()
    prev: dict[int, tuple[int, object]] = {fs: (fs, None)}
    queue = [fs]
    qi = 0
    while qi < len(queue):
        u = queue[qi]
        qi += 1
        if u == ft:
            break
        for v, tag in tree.get(u, ()):
            if v not in prev:
                prev[v] = (u, tag)
                queue.append(v)
    out: set = set()
    node = ft
    while node != fs:
        up, tag = prev[node]
        out.add(tag)
        node = up
    return out


@dataclass(frozen=True)
class RegionSplit:
    """Box vertices split by a crossing; the crossing belongs to ``lower``."""

    lower: frozenset[Vertex]
    upper: frozenset[Vertex]


def _upper_vertex_mask(crossing: Crossing, box: LatticeBox) -> np.ndarray:
    """Vertices joined to the top side avoiding crossing vertices."""
    rows, cols = box.height + 1, box.width + 1
    blocked = np.zeros((rows, cols), dtype=bool)
    for x, y in crossing.path.vertices:
        blocked[y - box.y_min, x - box.x_min] = True
    n = rows * cols
    idx = np.arange(n, dtype=np.int64).reshape(rows, cols)
    free = ~blocked
    h_ok = free[:, :-1] & free[:, 1:]
    v_ok = free[:-1, :] & free[1:, :]
    ii = []
    jj = []
    if h_ok.size:
        ii.append(idx[:, :-1][h_ok])
        jj.append(idx[:, 1:][h_ok])
    if v_ok.size:
        ii.append(idx[:-1, :][v_ok])
        jj.append(idx[1:, :][v_ok])
    if ii:
        g = coo_matrix(
            (np.ones(sum(len(a) for a in ii), dtype=np.int8),
             (np.concatenate(ii), np.concatenate(jj))),
            shape=(n, n),
        )
        _, labels = connected_components(g, directed=False)
        labels = labels.reshape(rows, cols)
    else:
        labels = idx
    top = labels[-1, :][free[-1, :]]
    if len(top) == 0:
        return np.zeros((rows, cols), dtype=bool)
    return np.isin(labels, np.unique(top)) & free


def region_split(crossing: Crossing, box: LatticeBox) -> RegionSplit:
    """Partition box vertices by connectivity to the top side once the
    crossing vertices are removed; everything else, crossing included,
    is the lower part."""
    upper_mask = _upper_vertex_mask(crossing, box)
    upper = []
    lower = []
    for r in range(box.height + 1):
        for c in range(box.width + 1):
            v = (box.x_min + c, box.y_min + r)
            (upper if upper_mask[r, c] else lower).append(v)
    return RegionSplit(lower=frozenset(lower), upper=frozenset(upper))


# ---------------------------------------------------------------------------
# annulus circuits

def _annulus_face_setup(config: Configuration, annulus: Annulus):
    o, i = annulus.outer, annulus.inner
    _require_box_inside(config, o)
    rows, cols = o.height + 2, o.width + 2

    # vertical steps cross H edges (o.x_min - 1 + c, o.y_min + r)
    hx = np.arange(o.x_min - 1, o.x_max + 1, dtype=np.int64)
    hy = np.arange(o.y_min, o.y_max + 1, dtype=np.int64)
    hxx = np.broadcast_to(hx[None, :], (rows - 1, cols))
    hyy = np.broadcast_to(hy[:, None], (rows - 1, cols))
    in_outer_h = (hxx >= o.x_min) & (hxx + 1 <= o.x_max)
    touch_inner_h = (
        (hyy >= i.y_min) & (hyy <= i.y_max) & (hxx >= i.x_min - 1) & (hxx <= i.x_max)
    )
    ann_h = in_outer_h & ~touch_inner_h
    wh = _gather_h(config, o.x_min - 1, o.x_max + 1, o.y_min, o.y_max)
    v_ok = ~ann_h | (wh > 0)

    # horizontal steps cross V edges (o.x_min + c, o.y_min - 1 + r)
    vx = np.arange(o.x_min, o.x_max + 1, dtype=np.int64)
    vy = np.arange(o.y_min - 1, o.y_max + 1, dtype=np.int64)
    vxx = np.broadcast_to(vx[None, :], (rows, cols - 1))
    vyy = np.broadcast_to(vy[:, None], (rows, cols - 1))
    in_outer_v = (vyy >= o.y_min) & (vyy + 1 <= o.y_max)
    touch_inner_v = (
        (vxx >= i.x_min) & (vxx <= i.x_max) & (vyy >= i.y_min - 1) & (vyy <= i.y_max)
    )
    ann_v = in_outer_v & ~touch_inner_v
    wv = _gather_v(config, o.x_min, o.x_max, o.y_min - 1, o.y_max + 1)
    h_ok = ~ann_v | (wv > 0)

    labels = _face_components(v_ok, h_ok)

    seed = np.zeros((rows, cols), dtype=bool)
    c0 = i.x_min - 1 - (o.x_min - 1)
    c1 = i.x_max - (o.x_min - 1)
    r0 = i.y_min - 1 - (o.y_min - 1)
    r1 = i.y_max - (o.y_min - 1)
    seed[r0 : r1 + 1, c0 : c1 + 1] = True

    ring = np.zeros((rows, cols), dtype=bool)
    ring[0, :] = ring[-1, :] = True
    ring[:, 0] = ring[:, -1] = True
    return labels, seed, ring


def has_open_circuit(config: Configuration, annulus: Annulus) -> bool:
    """True iff some open circuit inside the annulus surrounds its hole."""
    labels, seed, ring = _annulus_face_setup(config, annulus)
    return not bool(np.isin(labels[seed], labels[ring]).any())


@dataclass(frozen=True)
class AnnulusCircuit:
    circuit: LatticePath
    annulus: Annulus
    kind: str

    def surrounds_center(self) -> bool:
        """Parity ray test around the annulus center, exact arithmetic."""
        i = self.annulus.inner
        cx2 = i.x_min + i.x_max
        cy2 = i.y_min + i.y_max
        ry2 = cy2 if cy2 % 2 == 1 else cy2 + 1
        hits = 0
        for e in self.circuit.edges:
            if e.orientation == VERTICAL and 2 * e.x > cx2 and 2 * e.y < ry2 < 2 * e.y + 2:
                hits += 1
        return hits % 2 == 1


def _fill_and_boundary(region: np.ndarray, keep: np.ndarray):
    """Fill pockets of the complement that avoid ``keep``; return the
    filled region and its boundary-edge mask pair (vertical, horizontal
    face-step crossings)."""
    comp = ~region
    v_ok = comp[:-1, :] & comp[1:, :]
    h_ok = comp[:, :-1] & comp[:, 1:]
    labels = _face_components(v_ok, h_ok)
    keep_labels = np.unique(labels[keep & comp])
    filled = region | (comp & ~np.isin(labels, keep_labels))
    bound_v = filled[:-1, :] != filled[1:, :]
    bound_h = filled[:, :-1] != filled[:, 1:]
    return filled, bound_v, bound_h


def _trace_circuit(bound_v, bound_h, annulus: Annulus, kind: str) -> AnnulusCircuit:
    o = annulus.outer
    incident: dict[Vertex, list[Vertex]] = {}

    def add(e: Edge) -> None:
        a, b = edge_endpoints(e)
        incident.setdefault(a, []).append(b)
        incident.setdefault(b, []).append(a)

    for r, c in np.argwhere(bound_v):
        add(Edge(HORIZONTAL, o.x_min - 1 + int(c), o.y_min + int(r)))
    for r, c in np.argwhere(bound_h):
        add(Edge(VERTICAL, o.x_min + int(c), o.y_min - 1 + int(r)))
    if not incident:
        raise AssertionError("empty circuit boundary")
    for v, nbrs in incident.items():
        if len(nbrs) != 2:
            raise AssertionError(f"boundary is not a simple curve at {v}")
    start = min(incident)
    walk = [start, min(incident[start])]
    while walk[-1] != start:
        a, b = incident[walk[-1]]
        walk.append(b if a == walk[-2] else a)
    circuit = AnnulusCircuit(LatticePath(walk), annulus, kind)
    if not circuit.surrounds_center():
        raise AssertionError("traced circuit does not surround the inner box")
    return circuit


def innermost_circuit(config: Configuration, annulus: Annulus) -> AnnulusCircuit | None:
    """The open circuit surrounding the hole with nothing open inside it.

    Grows the blocked-dual region outward from the hole; after filling
    its pockets, the region's outer boundary is exactly the innermost
    circuit (every separating edge is forced open, and the filled region
    has no pinch corners).
    """
    labels, seed, ring = _annulus_face_setup(config, annulus)
    seed_labels = np.unique(labels[seed])
    if np.isin(labels[ring], seed_labels).any():
        return None
    region = np.isin(labels, seed_labels)
    _, bound_v, bound_h = _fill_and_boundary(region, keep=ring)
    return _trace_circuit(bound_v, bound_h, annulus, _INNERMOST)


def outermost_circuit(config: Configuration, annulus: Annulus) -> AnnulusCircuit | None:
    """Mirror of :func:`innermost_circuit`, grown inward from outside."""
    labels, seed, ring = _annulus_face_setup(config, annulus)
    ring_labels = np.unique(labels[ring])
    if np.isin(labels[seed], ring_labels).any():
        return None
    region = np.isin(labels, ring_labels)
    _, bound_v, bound_h = _fill_and_boundary(region, keep=seed)
    return _trace_circuit(bound_v, bound_h, annulus, _OUTERMOST)


# ---------------------------------------------------------------------------
# crossing events

def event_rectangle(n: int, delta1: float, i: int) -> LatticeBox:
    """Rectangle crossed left to right in the i-th annulus event."""
    s = base_scale(n, delta1)
    half = 2 ** (i - 2) * s if i >= 2 else max(1, s // 2)
    return LatticeBox(2 ** (i - 2) * s, 2 ** (i + 1) * s, -half, half)


def detect_event_E(
    config: Configuration,
    i: int,
    annuli: Sequence[Annulus],
    rectangle: LatticeBox,
) -> bool:
    """Open circuits in the neighbor annuli plus an open crossing of the
    rectangle; the conjunction of the three sub-events."""
    k = len(annuli)
    if not (1 <= i - 1 and i + 1 <= k):
        raise IndexError(f"event index {i} out of range for {k} annuli")
    return (
        has_open_circuit(config, annuli[i - 2])
        and has_open_circuit(config, annuli[i])
        and has_open_crossing(config, rectangle, LEFT_RIGHT)
    )


# ---------------------------------------------------------------------------
# good and accessible squares

class UnitSquare:
    """Axis-aligned square of side M anchored at its lower-left corner."""

    __slots__ = ("anchor", "side")

    def __init__(self, anchor: Vertex, side: int = 1):
        if side < 1:
            raise ValueError("side must be positive")
        self.anchor = (int(anchor[0]), int(anchor[1]))
        self.side = int(side)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, UnitSquare)
            and self.anchor == other.anchor
            and self.side == other.side
        )

    def __hash__(self) -> int:
        return hash((self.anchor, self.side))

    def __repr__(self) -> str:
        return f"UnitSquare({self.anchor}, side={self.side})"

    def lattice_points(self) -> list[Vertex]:
        ax, ay = self.anchor
        return [
            (ax + i, ay + j)
            for j in range(self.side + 1)
            for i in range(self.side + 1)
        ]

    def corners(self) -> list[Vertex]:
        ax, ay = self.anchor
        m = self.side
        return [(ax, ay), (ax + m, ay), (ax + m, ay + m), (ax, ay + m)]

    def edges(self) -> list[Edge]:
        """Unit edges of the square boundary."""
        ax, ay = self.anchor
        m = self.side
        out = []
        for i in range(m):
            out.append(Edge(HORIZONTAL, ax + i, ay))
            out.append(Edge(HORIZONTAL, ax + i, ay + m))
            out.append(Edge(VERTICAL, ax, ay + i))
            out.append(Edge(VERTICAL, ax + m, ay + i))
        return out


def _square_gap_sq(a: UnitSquare, b: UnitSquare) -> int:
    """Squared Euclidean distance between the two squares' vertex sets."""
    gx = max(0, max(a.anchor[0], b.anchor[0]) - min(a.anchor[0] + a.side, b.anchor[0] + b.side))
    gy = max(0, max(a.anchor[1], b.anchor[1]) - min(a.anchor[1] + a.side, b.anchor[1] + b.side))
    return gx * gx + gy * gy


def good_squares(crossing: Crossing, box: LatticeBox, M: int = 1) -> list[UnitSquare]:
    """Greedily thinned 3-disjoint good M-squares for a crossing.

    A good square lies fully in the upper part of the crossing's region
    split and its vertex set sits at Euclidean distance exactly 1 from
    the crossing vertices.  Candidates are visited in the order the
    crossing first passes them, and a candidate is kept when its vertex
    set is at distance at least 3 from every square already kept.
    """
    if M < 1:
        raise ValueError("M must be positive")
    rows, cols = box.height + 1, box.width + 1
    upper = _upper_vertex_mask(crossing, box)

    near = np.zeros((rows, cols), dtype=np.int64)
    near[:] = -1
    for idx, (x, y) in enumerate(crossing.path.vertices):
        r, c = y - box.y_min, x - box.x_min
        for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols and near[rr, cc] == -1:
                near[rr, cc] = idx

    candidates: list[tuple[int, int, int, UnitSquare]] = []
    ax0 = -(-box.x_min // M)  # first anchor index with M*ax >= x_min
    ay0 = -(-box.y_min // M)
    ax1 = (box.x_max - M) // M
    ay1 = (box.y_max - M) // M
    for uy in range(ay0, ay1 + 1):
        for ux in range(ax0, ax1 + 1):
            sq = UnitSquare((M * ux, M * uy), M)
            pts = [(x - box.x_min, y - box.y_min) for x, y in sq.lattice_points()]
            if not all(upper[r, c] for c, r in pts):
                continue
            touches = [near[r, c] for c, r in pts if near[r, c] >= 0]
            if not touches:
                continue
            candidates.append((min(touches), M * uy, M * ux, sq))

    candidates.sort()
    kept: list[UnitSquare] = []
    for _, _, _, sq in candidates:
        if all(_square_gap_sq(sq, other) >= 9 for other in kept):
            kept.append(sq)
    return kept


def companion_square(
    config: Configuration, crossing: Crossing, square: UnitSquare
) -> tuple[UnitSquare, Edge, list[Edge], list[Vertex]] | None:
    """The unit square mediating between a good square and the crossing.

    Returns ``(companion, crossing_edge, bypass_edges, bypass_corners)``
    for the selected companion: a unit square sharing an edge with the
    good square and containing exactly one crossing edge.  Ties go to
    the smallest anchor in row-major order.  ``None`` when no candidate
    qualifies.
    """
    cross_edges = crossing.path.edge_set()
    ax, ay = square.anchor
    m = square.side
    cands: list[Vertex] = []
    for j in range(m):
        cands.append((ax + j, ay - 1))
        cands.append((ax + j, ay + m))
    for j in range(m):
        cands.append((ax - 1, ay + j))
        cands.append((ax + m, ay + j))
    best: tuple[int, int, UnitSquare, Edge] | None = None
    for anchor in cands:
        comp = UnitSquare(anchor, 1)
        if not all(config.box.contains_vertex(v) for v in comp.corners()):
            continue
        on_crossing = [e for e in comp.edges() if e in cross_edges]
        if len(on_crossing) != 1:
            continue
        key = (anchor[1], anchor[0])
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], comp, on_crossing[0])
    if best is None:
        return None
    _, _, comp, ce = best
    bypass = [e for e in comp.edges() if e != ce]
    ce_ends = set(edge_endpoints(ce))
    corners = [v for v in comp.corners() if v not in ce_ends]
    return comp, ce, bypass, corners


def accessible_squares(
    config: Configuration, crossing: Crossing, goods: Iterable[UnitSquare]
) -> list[UnitSquare]:
    """Good squares whose companion has its three non-crossing edges open."""
    out = []
    for sq in goods:
        found = companion_square(config, crossing, sq)
        if found is None:
            continue
        _, _, bypass, _ = found
        if all(config.weight_scaled(e) == 0 for e in bypass):
            out.append(sq)
    return out
