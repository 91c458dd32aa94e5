"""Shortest passage times, distance fields, and tight-edge subgraphs.

All arithmetic runs on the configuration's scaled integer weights, so
distances and tightness tests are exact (no epsilons anywhere).

Two shortest-path disciplines are provided and must agree exactly:

* ``dijkstra`` is a reference priority-queue sweep over vertices written
  in plain Python; it handles zero-weight edges directly.
* ``zero_one`` realizes the two-level-queue idea for two-valued weight
  fields: the zero level is a flood through open edges (cluster
  contraction), the unit level a breadth-first frontier over the
  contracted graph.  It is vectorized and is the fast path at scale.

For general atomic weights the fast path contracts zero clusters the same
way and runs a compiled Dijkstra on the positive-weight cluster graph.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra as _csgraph_dijkstra

from .lattice import (
    HORIZONTAL,
    VERTICAL,
    Annulus,
    Edge,
    LatticeBox,
    LatticePath,
    Vertex,
)
from .randomfield import Configuration, EdgeDistribution, SeedSpec, sample_configuration

UNREACHED = -1  # internal marker inside scaled-distance arrays


def _vertex_shape(box: LatticeBox) -> tuple[int, int]:
    return (box.height + 1, box.width + 1)


def _flat(box: LatticeBox, v: Vertex) -> int:
    return (v[1] - box.y_min) * (box.width + 1) + (v[0] - box.x_min)


def _grid_edge_arrays(config: Configuration):
    """Flat endpoint indices and scaled weights of every in-box edge."""
    box = config.box
    w = box.width + 1
    h = box.height + 1
    idx = np.arange(w * h, dtype=np.int32).reshape(h, w)
    iu = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    iv = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    wt = np.concatenate([config.h_weights.ravel(), config.v_weights.ravel()])
    return iu, iv, wt


def _zero_cluster_labels(config: Configuration) -> tuple[int, np.ndarray]:
    """Connected components of the open-edge subgraph (vertex labels)."""
    box = config.box
    nv = box.vertex_count()
    iu, iv, wt = _grid_edge_arrays(config)
    mask = wt == 0
    if not mask.any():
        return nv, np.arange(nv, dtype=np.int64)
    g = coo_matrix(
        (np.ones(int(mask.sum()), dtype=np.int8), (iu[mask], iv[mask])),
        shape=(nv, nv),
    )
    ncomp, labels = connected_components(g, directed=False)
    return ncomp, labels.astype(np.int64)


def _limited_zero_one_flat(config: Configuration, sources, limit_scaled: int | None):
    """Scaled 0-1 distance field, optionally truncated beyond a limit.

    Values beyond the limit come back as the UNREACHED marker; values at
    or under it are exact.  Duplicate cluster-graph edges are harmless
    because the breadth-first sweep ignores weights.
    """
    box = config.box
    nv = box.vertex_count()
    iu, iv, wt = _grid_edge_arrays(config)
    zmask = wt == 0
    if zmask.any():
        g0 = coo_matrix(
            (np.ones(int(zmask.sum()), dtype=np.int8), (iu[zmask], iv[zmask])),
            shape=(nv, nv),
        )
        ncomp, labels = connected_components(g0, directed=False)
        labels = labels.astype(np.int64)
    else:
        ncomp, labels = nv, np.arange(nv, dtype=np.int64)
    pmask = ~zmask
    pos = np.unique(wt[pmask])
    if len(pos) > 1:
        raise ValueError("limited sweep requires two-valued weights")
    src = np.unique(labels[np.asarray(sources, dtype=np.int64)])
    if not pmask.any():
        cd = np.full(ncomp, np.inf)
        cd[src] = 0.0
    else:
        cu = labels[iu[pmask]]
        cv = labels[iv[pmask]]
        g = coo_matrix((np.ones(len(cu), dtype=np.int8), (cu, cv)), shape=(ncomp, ncomp))
        hop_limit = np.inf
        if limit_scaled is not None:
            hop_limit = limit_scaled / float(pos[0])
        cd = _csgraph_dijkstra(
            g, directed=False, indices=src, min_only=True, unweighted=True,
            limit=hop_limit,
        )
        cd = cd * float(pos[0])
    out = np.full(nv, UNREACHED, dtype=np.int64)
    vals = cd[labels]
    finite = np.isfinite(vals)
    out[finite] = np.rint(vals[finite]).astype(np.int64)
    return out


@dataclass(frozen=True)
class DistanceField:
    """Exact shortest passage times from a source set to all box vertices.

    Distances are stored scaled; unreachable vertices carry an explicit
    marker and surface as ``None``, never as a sentinel number.
    """

    box: LatticeBox
    source: frozenset[Vertex]
    scale: int
    _dist: np.ndarray  # int64, shape (height+1, width+1), UNREACHED marker

    def scaled_at(self, v: Vertex) -> int | None:
        if not self.box.contains_vertex(v):
            raise ValueError(f"{v} outside {self.box}")
        d = int(self._dist[v[1] - self.box.y_min, v[0] - self.box.x_min])
        return None if d == UNREACHED else d

    def value(self, v: Vertex):
        """Unscaled exact distance, or ``None`` when unreachable."""
        d = self.scaled_at(v)
        if d is None:
            return None
        if self.scale == 1:
            return d
        from fractions import Fraction

        f = Fraction(d, self.scale)
        return int(f) if f.denominator == 1 else f

    def is_reachable(self, v: Vertex) -> bool:
        return self.scaled_at(v) is not None

    def scaled_array(self) -> np.ndarray:
        """Read-only scaled distance grid (row-major, UNREACHED marker)."""
        a = self._dist.view()
        a.setflags(write=False)
        return a


def _field_from_flat(config: Configuration, source: frozenset, flat: np.ndarray) -> DistanceField:
    grid = flat.reshape(_vertex_shape(config.box))
    return DistanceField(config.box, source, config.scale, grid)


def _python_dijkstra(config: Configuration, sources: Sequence[int]) -> np.ndarray:
    """Reference priority-queue discipline on the vertex graph."""
    box = config.box
    w = box.width + 1
    nv = box.vertex_count()
    hw = config.h_weights
    vw = config.v_weights
    dist = [None] * nv
    heap = [(0, s) for s in sorted(sources)]
    heapq.heapify(heap)
    for s in sources:
        dist[s] = 0
    while heap:
        d, i = heapq.heappop(heap)
        if dist[i] is not None and d > dist[i]:
            continue
        y, x = divmod(i, w)
        # east, north, west, south
        if x + 1 < w:
            nd = d + int(hw[y, x])
            j = i + 1
            if dist[j] is None or nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
        if y + 1 < box.height + 1:
            nd = d + int(vw[y, x])
            j = i + w
            if dist[j] is None or nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
        if x > 0:
            nd = d + int(hw[y, x - 1])
            j = i - 1
            if dist[j] is None or nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
        if y > 0:
            nd = d + int(vw[y - 1, x])
            j = i - w
            if dist[j] is None or nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
    return np.array([UNREACHED if d is None else d for d in dist], dtype=np.int64)


def _cluster_graph(config: Configuration, labels: np.ndarray, ncomp: int):
    """Positive-weight multigraph on zero clusters, deduplicated to the
    minimum weight per cluster pair."""
    iu, iv, wt = _grid_edge_arrays(config)
    mask = wt > 0
    cu = labels[iu[mask]]
    cv = labels[iv[mask]]
    ww = wt[mask]
    keep = cu != cv
    cu, cv, ww = cu[keep], cv[keep], ww[keep]
    lo = np.minimum(cu, cv)
    hi = np.maximum(cu, cv)
    order = np.lexsort((ww, hi, lo))
    lo, hi, ww = lo[order], hi[order], ww[order]
    if len(lo):
        first = np.ones(len(lo), dtype=bool)
        first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
        lo, hi, ww = lo[first], hi[first], ww[first]
    return lo, hi, ww


def _contracted_field(config: Configuration, sources: Sequence[int], unit: bool) -> np.ndarray:
    if unit:
        return _limited_zero_one_flat(config, sources, None)
    ncomp, labels = _zero_cluster_labels(config)
    lo, hi, ww = _cluster_graph(config, labels, ncomp)
    src_clusters = np.unique(labels[np.asarray(sources, dtype=np.int64)])
    if len(lo) == 0:
        cd = np.full(ncomp, np.inf)
        cd[src_clusters] = 0.0
    else:
        g = coo_matrix((ww.astype(np.float64), (lo, hi)), shape=(ncomp, ncomp))
        cd = _csgraph_dijkstra(
            g, directed=False, indices=src_clusters, min_only=True,
            unweighted=False,
        )
    out = np.full(config.box.vertex_count(), UNREACHED, dtype=np.int64)
    finite = np.isfinite(cd[labels])
    out[finite] = np.rint(cd[labels][finite]).astype(np.int64)
    return out


def _two_valued(config: Configuration) -> bool:
    vals = set(np.unique(config.h_weights)) | set(np.unique(config.v_weights))
    vals.discard(0)
    return len(vals) <= 1


def distance_field(
    config: Configuration,
    source: Iterable[Vertex],
    method: str = "auto",
) -> DistanceField:
    """Exact single-source (or multi-source) shortest passage times.

    ``method`` selects the discipline: ``"dijkstra"`` is the reference
    priority-queue sweep, ``"zero_one"`` the contracted two-level-queue
    fast path (two-valued weights only), ``"auto"`` picks the fast path
    that applies.  All disciplines produce identical fields.
    """
    src = frozenset(source)
    if not src:
        raise ValueError("source set is empty")
    box = config.box
    for v in src:
        if not box.contains_vertex(v):
            raise ValueError(f"source vertex {v} outside {box}")
    flat_sources = [_flat(box, v) for v in src]

    if method == "dijkstra":
        flat = _python_dijkstra(config, flat_sources)
    elif method == "zero_one":
        if not _two_valued(config):
            raise ValueError("zero_one discipline requires two-valued weights")
        flat = _contracted_field(config, flat_sources, unit=True)
    elif method == "auto":
        flat = _contracted_field(config, flat_sources, unit=_two_valued(config))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _field_from_flat(config, src, flat)


def point_passage_time(config: Configuration, n: int):
    """Passage time from the origin to ``(n, 0)`` within the box."""
    box = config.box
    if not box.contains_vertex((0, 0)) or not box.contains_vertex((n, 0)):
        raise ValueError(f"endpoints (0,0), ({n},0) must lie inside {box}")
    field = distance_field(config, [(0, 0)])
    return field.value((n, 0))


@dataclass(frozen=True)
class TightSubgraph:
    """All edges lying on at least one time-optimal walk between two sets.

    Every member edge satisfies ``d_s(u) + t(e) + d_t(v) == total_time``
    in some orientation; the edge set of every optimal path is contained
    here (the converse can fail: a tight edge need not be usable by a
    self-avoiding optimal path).
    """

    edges: frozenset[Edge]
    source: frozenset[Vertex]
    target: frozenset[Vertex]
    total_time: object  # exact int or Fraction
    total_scaled: int


def tight_subgraph(
    config: Configuration,
    source: Iterable[Vertex],
    target: Iterable[Vertex],
) -> TightSubgraph:
    src = frozenset(source)
    tgt = frozenset(target)
    ds = distance_field(config, src)
    dt = distance_field(config, tgt)
    t_scaled = min(
        (ds.scaled_at(v) for v in tgt if ds.scaled_at(v) is not None), default=None
    )
    if t_scaled is None:
        raise ValueError("target unreachable from source")

    box = config.box
    a_s = ds.scaled_array()
    a_t = dt.scaled_array()
    edges: list[Edge] = []

    def collect(orient: str, du, dv, tu, tv, wt, x0, y0):
        ok = (du != UNREACHED) & (dv != UNREACHED) & (tu != UNREACHED) & (tv != UNREACHED)
        tight = ok & (((du + wt + tv) == t_scaled) | ((dv + wt + tu) == t_scaled))
        for yy, xx in np.argwhere(tight):
            edges.append(Edge(orient, int(xx) + x0, int(yy) + y0))

    collect(
        HORIZONTAL,
        a_s[:, :-1], a_s[:, 1:], a_t[:, :-1], a_t[:, 1:],
        config.h_weights, box.x_min, box.y_min,
    )
    collect(
        VERTICAL,
        a_s[:-1, :], a_s[1:, :], a_t[:-1, :], a_t[1:, :],
        config.v_weights, box.x_min, box.y_min,
    )
    return TightSubgraph(
        edges=frozenset(edges),
        source=src,
        target=tgt,
        total_time=config.unscale(t_scaled),
        total_scaled=t_scaled,
    )


def extract_geodesic(config: Configuration, s: Vertex, t: Vertex) -> LatticePath:
    """One deterministic optimal path from ``s`` to ``t``.

    Works on the contracted cluster graph: a compiled Dijkstra picks the
    cluster route, then breadth-first searches over open edges stitch the
    route inside each zero cluster.  Neighbor order is east, north, west,
    south throughout, so the result is reproducible.
    """
    box = config.box
    if s == t:
        return LatticePath([s])
    ncomp, labels = _zero_cluster_labels(config)
    w = box.width + 1
    fs, ft = _flat(box, s), _flat(box, t)

    iu, iv, wt = _grid_edge_arrays(config)
    mask = wt > 0
    cu, cv = labels[iu[mask]], labels[iv[mask]]
    keep = cu != cv
    pe_u, pe_v, pe_w = iu[mask][keep], iv[mask][keep], wt[mask][keep]
    pc_u, pc_v = cu[keep], cv[keep]

    cs, ct = int(labels[fs]), int(labels[ft])
    if cs == ct:
        verts = _bfs_in_cluster(config, labels, fs, ft)
        return LatticePath(verts)

    lo = np.minimum(pc_u, pc_v)
    hi = np.maximum(pc_u, pc_v)
    order = np.lexsort((np.minimum(pe_u, pe_v), pe_w, hi, lo))
    lo, hi = lo[order], hi[order]
    pe_u, pe_v, pe_w = pe_u[order], pe_v[order], pe_w[order]
    first = np.ones(len(lo), dtype=bool)
    if len(lo):
        first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    lo, hi = lo[first], hi[first]
    pe_u, pe_v, pe_w = pe_u[first], pe_v[first], pe_w[first]

    g = coo_matrix((pe_w.astype(np.float64), (lo, hi)), shape=(ncomp, ncomp))
    dists, pred = _csgraph_dijkstra(
        g, directed=False, indices=cs, return_predecessors=True
    )
    if not np.isfinite(dists[ct]):
        raise ValueError("target unreachable from source")
    route = [ct]
    while route[-1] != cs:
        p = int(pred[route[-1]])
        if p < 0:
            raise ValueError("target unreachable from source")
        route.append(p)
    route.reverse()

    # representative primal edge per cluster pair, keyed both ways
    edge_for: dict[tuple[int, int], tuple[int, int]] = {}
    for a, b, u_, v_ in zip(lo, hi, pe_u, pe_v):
        edge_for[(int(a), int(b))] = (int(u_), int(v_))

    verts: list[Vertex] = []
    cur = fs
    for ca, cb in zip(route, route[1:]):
        u_, v_ = edge_for[(min(ca, cb), max(ca, cb))]
        if int(labels[u_]) != ca:
            u_, v_ = v_, u_
        seg = _bfs_in_cluster(config, labels, cur, u_)
        verts.extend(seg if not verts else seg[1:])
        verts.append((v_ % w + box.x_min, v_ // w + box.y_min))
        cur = v_
    seg = _bfs_in_cluster(config, labels, cur, ft)
    verts.extend(seg[1:])
    return LatticePath(verts)


def _bfs_in_cluster(config: Configuration, labels: np.ndarray, fa: int, fb: int) -> list[Vertex]:
    """Shortest open-edge path between two vertices of one zero cluster."""
    box = config.box
    w = box.width + 1
    h = box.height + 1
    hw, vw = config.h_weights, config.v_weights
    if fa == fb:
        return [(fa % w + box.x_min, fa // w + box.y_min)]
    from collections import deque

    prev = {fa: -1}
    q = deque([fa])
    while q:
        i = q.popleft()
        if i == fb:
            break
        y, x = divmod(i, w)
        if x + 1 < w and hw[y, x] == 0 and (i + 1) not in prev:
            prev[i + 1] = i
            q.append(i + 1)
        if y + 1 < h and vw[y, x] == 0 and (i + w) not in prev:
            prev[i + w] = i
            q.append(i + w)
        if x > 0 and hw[y, x - 1] == 0 and (i - 1) not in prev:
            prev[i - 1] = i
            q.append(i - 1)
        if y > 0 and vw[y - 1, x] == 0 and (i - w) not in prev:
            prev[i - w] = i
            q.append(i - w)
    if fb not in prev:
        raise ValueError("vertices not joined inside the zero cluster")
    chain = [fb]
    while chain[-1] != fa:
        chain.append(prev[chain[-1]])
    chain.reverse()
    return [(i % w + box.x_min, i // w + box.y_min) for i in chain]


@dataclass(frozen=True)
class ConfinementCertificate:
    """Outcome of the box-escalation protocol for one replicate.

    ``certified`` is set only when the computed passage time provably
    equals the infinite-lattice value: either it is zero (enlarging the
    box can only lower a nonnegative time) or every path touching the box
    boundary already costs strictly more than the computed time, so no
    optimal path exits.  The witness records the supporting diagnostics.
    """

    box: LatticeBox
    certified: bool
    witness: dict


def certify_confinement(
    dist: EdgeDistribution,
    n: int,
    seed: SeedSpec,
    growth: float = 2.0,
    max_halfwidth: int | None = None,
) -> tuple[Configuration, ConfinementCertificate]:
    """Sample growing boxes until the passage time to ``(n, 0)`` is certified.

    Boxes are centered at the origin with half-widths ``2n, 2n*growth,
    ...`` extending the same random stream (shared edges keep their
    weights).  An uncertified result, returned once the half-width cap is
    exceeded, is a valid flagged outcome.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if growth <= 1.0:
        raise ValueError("growth factor must exceed 1")
    cap = 64 * n if max_halfwidth is None else max_halfwidth

    from .geometry import has_open_circuit  # local import avoids a cycle

    h = 2 * n
    prev_t: int | None = None
    two_valued_cache: bool | None = None
    while True:
        box = LatticeBox.centered(h)
        config = sample_configuration(box, dist, seed)
        if two_valued_cache is None:
            two_valued_cache = _two_valued(config)
        if two_valued_cache and prev_t is not None:
            # passage time is nonincreasing in the box, so the previous
            # value bounds the search radius for both T and the boundary
            flat = _limited_zero_one_flat(config, [_flat(box, (0, 0))], prev_t)
            field = _field_from_flat(config, frozenset([(0, 0)]), flat)
        else:
            field = distance_field(config, [(0, 0)])
        t_scaled = field.scaled_at((n, 0))
        if t_scaled is None:
            raise AssertionError("passage time exceeded its monotone bound")
        arr = field.scaled_array()
        boundary = np.concatenate([arr[0, :], arr[-1, :], arr[1:-1, 0], arr[1:-1, -1]])
        reachable = boundary[boundary != UNREACHED]
        d_boundary = int(reachable.min()) if len(reachable) else None
        confined = t_scaled == 0 or (d_boundary is None) or (d_boundary > t_scaled)
        witness = {
            "halfwidth": h,
            "passage_time": config.unscale(t_scaled),
            "boundary_distance": None if d_boundary is None else config.unscale(d_boundary),
            "agreement": None if prev_t is None else (prev_t == t_scaled),
            "capped": False,
        }
        if confined:
            witness["open_circuit"] = bool(
                has_open_circuit(config, Annulus(outer=box, inner=LatticeBox.centered(n)))
            )
            return config, ConfinementCertificate(box, True, witness)
        nh = max(h + 1, int(round(h * growth)))
        if nh > cap:
            witness["capped"] = True
            witness["open_circuit"] = None
            return config, ConfinementCertificate(box, False, witness)
        prev_t = t_scaled
        h = nh
