"""Exact counting of optimal paths, with certificates and an oracle.

The exact counter is a depth-first enumeration over the tight extensions
of a partial path: an edge ``u -> w`` is explored only when the partial
time plus the edge weight plus the exact remaining distance from ``w``
(computed once, ignoring the visited set, hence never undercounting)
equals the total passage time.  Counts are exact Python integers; once a
count cap or a step budget is exceeded the enumeration aborts loudly
with an overflow marker carrying which budget fired.

The brute-force oracle enumerates every self-avoiding path with no
pruning and shares no logic with the exact counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import (
    LatticePath,
    Vertex,
    annulus_sequence,
    edge_between,
    edge_endpoints,
)
from .passage import (
    UNREACHED,
    distance_field,
    extract_geodesic,
    tight_subgraph,
)
from .randomfield import Configuration
from .geometry import (
    Crossing,
    UnitSquare,
    accessible_squares,
    companion_square,
    detect_event_E,
    event_rectangle,
    good_squares,
    innermost_circuit,
    lowest_crossing,
    outermost_circuit,
)

DEFAULT_STEP_BUDGET = 10**9

COUNT_CAP = "count_cap"
STEP_BUDGET = "step_budget"


@dataclass(frozen=True)
class GeodesicCount:
    """Exact count, or an overflow marker when enumeration aborted.

    ``value`` is set only when the enumeration completed under both
    budgets; ``partial`` always carries the paths seen so far.
    """

    value: int | None
    overflow: bool
    cap: int
    steps: int
    partial: int
    reason: str | None = None

    def to_json(self):
        if self.overflow:
            return {"overflow": True, "cap": str(self.cap), "steps": self.steps}
        return str(self.value)


@dataclass(frozen=True)
class GeodesicLengthStats:
    """Edge-length statistics over enumerated optimal paths.

    When the enumeration overflowed, the stats cover only the paths seen
    and ``upper_bound`` carries a sound bound (the tight-subgraph edge
    count) flagged by ``exact=False``.
    """

    min_len: int | None
    max_len: int | None
    sample_lengths: tuple[int, ...]
    exact: bool
    upper_bound: int | None = None


def _enumerate_tight(
    config: Configuration,
    s: Vertex,
    t: Vertex,
    cap: int,
    step_budget: int,
    on_path: Callable[[list[int]], None] | None = None,
):
    """Shared pruned enumeration; returns (count, steps, overflow_reason,
    min_len, max_len)."""
    box = config.box
    if not box.contains_vertex(s) or not box.contains_vertex(t):
        raise ValueError("endpoints must lie inside the configuration box")
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if s == t:
        if on_path is not None:
            on_path([0])
        return 1, 0, None, 0, 0

    w = box.width + 1
    h = box.height + 1
    dt_field = distance_field(config, [t])
    dt = dt_field.scaled_array().ravel()
    fs = (s[1] - box.y_min) * w + (s[0] - box.x_min)
    ft = (t[1] - box.y_min) * w + (t[0] - box.x_min)
    total = dt[fs]
    if total == UNREACHED:
        raise ValueError("target unreachable from source")
    total = int(total)

    hw = config.h_weights
    vw = config.v_weights

    # flat adjacency in fixed east, north, west, south order
    nbr: list[tuple[tuple[int, int], ...]] = [()] * (w * h)
    for i in range(w * h):
        y, x = divmod(i, w)
        lst = []
        if x + 1 < w:
            lst.append((i + 1, int(hw[y, x])))
        if y + 1 < h:
            lst.append((i + w, int(vw[y, x])))
        if x > 0:
            lst.append((i - 1, int(hw[y, x - 1])))
        if y > 0:
            lst.append((i - w, int(vw[y - 1, x])))
        nbr[i] = tuple(lst)

    visited = bytearray(w * h)
    visited[fs] = 1
    # frame: [vertex, neighbor cursor, time on arrival]
    stack: list[list[int]] = [[fs, 0, 0]]
    path: list[int] = [fs]
    count = 0
    steps = 0
    min_len: int | None = None
    max_len: int | None = None
    reason = None

    while stack:
        frame = stack[-1]
        v, cursor, at_time = frame
        nb = nbr[v]
        advanced = False
        while cursor < len(nb):
            j, wt = nb[cursor]
            cursor += 1
            nt = at_time + wt
            if not visited[j] and nt + dt[j] == total:
                steps += 1
                if steps > step_budget:
                    reason = STEP_BUDGET
                    break
                frame[1] = cursor
                if j == ft:
                    count += 1
                    length = len(path)
                    if min_len is None or length < min_len:
                        min_len = length
                    if max_len is None or length > max_len:
                        max_len = length
                    if on_path is not None:
                        on_path(path + [j])
                    if count > cap:
                        reason = COUNT_CAP
                    advanced = True  # stay on current frame
                    break
                visited[j] = 1
                path.append(j)
                stack.append([j, 0, nt])
                advanced = True
                break
        if reason is not None:
            break
        if not advanced:
            stack.pop()
            path.pop()
            visited[v] = 0
        elif stack[-1] is frame:
            # completion at the target: resume this frame
            continue
    return count, steps, reason, min_len, max_len


def count_geodesics_exact(
    config: Configuration,
    s: Vertex,
    t: Vertex,
    cap: int,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> GeodesicCount:
    """Count the self-avoiding optimal paths from ``s`` to ``t`` exactly."""
    count, steps, reason, _, _ = _enumerate_tight(config, s, t, cap, step_budget)
    if reason is not None:
        return GeodesicCount(
            value=None, overflow=True, cap=cap, steps=steps, partial=count, reason=reason
        )
    return GeodesicCount(
        value=count, overflow=False, cap=cap, steps=steps, partial=count
    )


def count_geodesics_bruteforce(config: Configuration, s: Vertex, t: Vertex) -> GeodesicCount:
    """Independent oracle: unpruned backtracking over all self-avoiding
    paths, counting those of minimal passage time.  Requires a box of at
    most 40 edges."""
    box = config.box
    if box.edge_count() > 40:
        raise ValueError("brute-force oracle is limited to boxes with at most 40 edges")
    if not box.contains_vertex(s) or not box.contains_vertex(t):
        raise ValueError("endpoints must lie inside the configuration box")

    best: list[int | None] = [None]
    at_best: list[int] = [0]
    visited = {s}

    def walk(v: Vertex, time_so_far: int) -> None:
        if v == t:
            if best[0] is None or time_so_far < best[0]:
                best[0] = time_so_far
                at_best[0] = 1
            elif time_so_far == best[0]:
                at_best[0] += 1
            return
        x, y = v
        for u in ((x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)):
            if u in visited or not box.contains_vertex(u):
                continue
            wt = config.weight_scaled(edge_between(v, u))
            visited.add(u)
            walk(u, time_so_far + wt)
            visited.remove(u)

    walk(s, 0)
    if best[0] is None:
        raise ValueError("target unreachable from source")
    n = at_best[0]
    return GeodesicCount(value=n, overflow=False, cap=n, steps=0, partial=n)


def max_geodesic_length(
    config: Configuration,
    s: Vertex,
    t: Vertex,
    cap: int,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> GeodesicLengthStats:
    """Min and max edge length over optimal paths, tracked during the
    same pruned enumeration as the exact counter."""
    lengths: list[int] = []

    def note(path: list[int]) -> None:
        if len(lengths) < 1000:
            lengths.append(len(path) - 1)

    count, steps, reason, min_len, max_len = _enumerate_tight(
        config, s, t, cap, step_budget, on_path=note
    )
    if reason is None:
        return GeodesicLengthStats(
            min_len=min_len, max_len=max_len, sample_lengths=tuple(lengths), exact=True
        )
    bound = len(tight_subgraph(config, [s], [t]).edges)
    return GeodesicLengthStats(
        min_len=min_len,
        max_len=max_len,
        sample_lengths=tuple(lengths),
        exact=False,
        upper_bound=bound,
    )


# ---------------------------------------------------------------------------
# lower-bound certificates

@dataclass(frozen=True)
class NotApplicable:
    """No crossing event occurred; a certificate cannot be built."""

    reason: str


@dataclass(frozen=True)
class CountCertificate:
    """Sound witness that the number of optimal paths is at least 2**kappa.

    Each witness square contributes an independent binary detour of a
    verified optimal path: its companion square has one edge on the path
    and three open off-path edges whose corners avoid the rest of the
    path, so every subset of detours yields a distinct self-avoiding
    optimal path.
    """

    kappa: int
    lower_bound: int
    witness_squares: tuple
    crossing: LatticePath
    event_index: int | None = None
    splice_verified: bool = True
    details: dict = field(default_factory=dict)


def _loop_erase(vertices: Sequence[Vertex]) -> list[Vertex]:
    pos: dict[Vertex, int] = {}
    out: list[Vertex] = []
    for v in vertices:
        if v in pos:
            k = pos[v]
            for dropped in out[k + 1 :]:
                del pos[dropped]
            del out[k + 1 :]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def _verified_detours(
    config: Configuration,
    base: LatticePath,
    squares: Sequence,
    crossing: Crossing,
) -> list:
    """Witness squares whose detour provably applies to ``base``."""
    base_edges = base.edge_set()
    base_verts = base.vertex_set()
    kept = []
    for sq in squares:
        found = companion_square(config, crossing, sq)
        if found is None:
            continue
        _, ce, bypass, corners = found
        if ce not in base_edges:
            continue
        if any(v in base_verts for v in corners):
            continue
        if any(config.weight_scaled(e) != 0 for e in bypass):
            continue
        kept.append(sq)
    return kept


def lower_bound_certificate(
    config: Configuration, n: int, delta1: float
) -> CountCertificate | NotApplicable:
    """Certificate that the origin-to-``(n,0)`` count is at least 2**kappa.

    Scans even annulus indices for the first crossing event, extracts the
    lowest crossing of the event rectangle together with the innermost
    and outermost circuits of the flanking annuli, selects 3-disjoint
    good squares, keeps the accessible ones, and then verifies the
    detour construction against an explicit optimal path through the
    crossing.  Only squares surviving that verification count toward
    ``kappa``, which keeps the bound sound instance by instance.
    """
    annuli = annulus_sequence(n, delta1)
    k = len(annuli)
    box = config.box
    if not box.contains_box(annuli[-1].outer):
        raise ValueError("configuration box must contain the outermost annulus")
    if not (box.contains_vertex((0, 0)) and box.contains_vertex((n, 0))):
        raise ValueError("configuration box must contain the endpoints")

    m_star = None
    for m in range(2, k):
        if m % 2 != 0:
            continue
        rect = event_rectangle(n, delta1, m)
        if not box.contains_box(rect):
            continue
        if detect_event_E(config, m, annuli, rect):
            m_star = m
            break
    if m_star is None:
        return NotApplicable(reason="no crossing event at any even annulus index")

    rect = event_rectangle(n, delta1, m_star)
    inner_c = innermost_circuit(config, annuli[m_star - 2])
    outer_c = outermost_circuit(config, annuli[m_star])
    beta = lowest_crossing(config, rect)
    if beta is None or inner_c is None or outer_c is None:
        raise AssertionError("event detected but witnesses missing")

    goods = good_squares(beta, rect, M=1)
    accessible = accessible_squares(config, beta, goods)

    ds = distance_field(config, [(0, 0)])
    dt = distance_field(config, [(n, 0)])
    a, b = beta.path.start, beta.path.end
    t_total = ds.scaled_at((n, 0))
    splice_ok = ds.scaled_at(a) + dt.scaled_at(b) == t_total

    kappa = 0
    witnesses: tuple = ()
    base = None
    if splice_ok:
        g1 = extract_geodesic(config, (0, 0), a)
        g2 = extract_geodesic(config, b, (n, 0))
        walk = list(g1.vertices) + list(beta.path.vertices[1:]) + list(g2.vertices[1:])
        base = LatticePath(_loop_erase(walk))
        base_time = sum(config.weight_scaled(e) for e in base.edges)
        if base_time != t_total:
            raise AssertionError("loop-erased splice lost optimality")
        kept = _verified_detours(config, base, accessible, beta)
        kappa = len(kept)
        witnesses = tuple(kept)

    return CountCertificate(
        kappa=kappa,
        lower_bound=2**kappa,
        witness_squares=witnesses,
        crossing=beta.path,
        event_index=m_star,
        splice_verified=bool(splice_ok),
        details={
            "good_squares": len(goods),
            "accessible_squares": len(accessible),
            "crossing_length": len(beta.path),
            "inner_circuit_length": len(inner_c.circuit),
            "outer_circuit_length": len(outer_c.circuit),
            "optimal_path": base,
        },
    )


def detour_certificate(config: Configuration, s: Vertex, t: Vertex) -> CountCertificate:
    """Direct detour certificate along one extracted optimal path.

    Walks a deterministic optimal path and collects unit squares with
    exactly one (open) edge on the path, three open off-path edges, and
    off-path corners, thinned to pairwise vertex-disjoint squares.  Each
    survivor is an independent binary detour, so the count of optimal
    paths is at least ``2**kappa``.  Cheap, and usable at any scale where
    the annulus construction is too coarse.
    """
    base = extract_geodesic(config, s, t)
    base_edges = base.edge_set()
    base_verts = base.vertex_set()
    box = config.box
    kept: list = []
    kept_pts: set[Vertex] = set()
    seen: set[tuple[int, int]] = set()
    for e in base.edges:
        if config.weight_scaled(e) != 0:
            continue
        anchors = (
            [(e.x, e.y), (e.x, e.y - 1)]
            if e.orientation == "H"
            else [(e.x, e.y), (e.x - 1, e.y)]
        )
        for anchor in anchors:
            if anchor in seen:
                continue
            seen.add(anchor)
            sq = UnitSquare(anchor, 1)
            if not all(box.contains_vertex(v) for v in sq.corners()):
                continue
            on_path = [se for se in sq.edges() if se in base_edges]
            if len(on_path) != 1:
                continue
            ce = on_path[0]
            bypass = [se for se in sq.edges() if se != ce]
            if any(config.weight_scaled(se) != 0 for se in bypass):
                continue
            ce_ends = set(edge_endpoints(ce))
            corners = [v for v in sq.corners() if v not in ce_ends]
            if any(v in base_verts for v in corners):
                continue
            if any(v in kept_pts for v in sq.corners()):
                continue
            kept.append(sq)
            kept_pts.update(sq.corners())
    return CountCertificate(
        kappa=len(kept),
        lower_bound=2 ** len(kept),
        witness_squares=tuple(kept),
        crossing=base,
        event_index=None,
        splice_verified=True,
        details={"path_length": len(base)},
    )
