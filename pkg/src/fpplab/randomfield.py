"""Reproducible i.i.d. edge-weight configurations.

Weights are drawn from a finite atomic distribution.  Every edge gets its
weight from a stateless counter-based generator: the 64-bit mix of a
per-replicate stream key with a fixed encoding of the edge coordinates.
This makes sampling a pure function of ``(box, distribution, seed)``,
platform independent, and automatically consistent across nested boxes
(growing the box extends the same stream, shared edges keep their
weights).

Atom values are held as exact rationals and scaled by a common integer
denominator, so all passage-time arithmetic downstream is exact integer
arithmetic; ``weight == 0`` comparisons never need an epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .lattice import HORIZONTAL, VERTICAL, Edge, LatticeBox, Vertex, edge_endpoints

_PROB_TOL = 1e-12

# SplitMix64 finalizer constants.
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

_COORD_OFFSET = 1 << 30  # coordinates must fit in signed 31 bits


def _mix64(z):
    """Vectorized SplitMix64 finalizer (bijective on uint64)."""
    z = (z + _GOLDEN) if np.isscalar(z) else z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _edge_codes(orientation_bit: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Unique uint64 code per edge from (orientation, anchor)."""
    if np.any(np.abs(xs) >= _COORD_OFFSET) or np.any(np.abs(ys) >= _COORD_OFFSET):
        raise ValueError("edge coordinates exceed the supported 31-bit range")
    code = (xs.astype(np.int64) + _COORD_OFFSET).astype(np.uint64) << np.uint64(31)
    code |= (ys.astype(np.int64) + _COORD_OFFSET).astype(np.uint64)
    code |= np.uint64(orientation_bit) << np.uint64(62)
    return code


def _uniforms(stream_key: np.uint64, codes: np.ndarray) -> np.ndarray:
    """I.i.d.-quality uniforms in [0, 1), one per edge code.

    ``mix64`` is a bijection, so for a fixed key distinct edges always
    receive distinct 64-bit words (no accidental collisions).
    """
    with np.errstate(over="ignore"):
        u = _mix64(_mix64(codes) ^ stream_key)
        u = _mix64(u)
    return (u >> np.uint64(11)).astype(np.float64) * (2.0**-53)


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus replicate index; replicates get independent streams."""

    master_seed: int
    replicate_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be nonnegative")

    def stream_key(self) -> np.uint64:
        """Per-replicate key; injective in replicate_index for a fixed
        master seed because the mix is a bijection."""
        with np.errstate(over="ignore"):
            k0 = _mix64(np.uint64(self.master_seed))
            return np.uint64(_mix64(k0 ^ np.uint64(self.replicate_index)))


@dataclass(frozen=True)
class EdgeDistribution:
    """Finite atomic weight distribution.

    ``atoms`` maps exact nonnegative rational values to probabilities;
    values are sorted and distinct, probabilities are positive and sum
    to one (tolerance 1e-12).
    """

    values: tuple[Fraction, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("distribution needs at least one atom")
        if len(self.values) != len(self.probabilities):
            raise ValueError("values and probabilities differ in length")
        if any(v < 0 for v in self.values):
            raise ValueError("atom values must be nonnegative")
        if list(self.values) != sorted(set(self.values)):
            raise ValueError("atom values must be sorted and distinct")
        if any(p <= 0 for p in self.probabilities):
            raise ValueError("atom probabilities must be positive")
        if abs(sum(self.probabilities) - 1.0) > _PROB_TOL:
            raise ValueError("atom probabilities must sum to 1")

    @staticmethod
    def from_atoms(atoms: Iterable[tuple[object, float]]) -> "EdgeDistribution":
        pairs = sorted((Fraction(v), float(p)) for v, p in atoms)
        return EdgeDistribution(
            values=tuple(v for v, _ in pairs),
            probabilities=tuple(p for _, p in pairs),
        )

    @staticmethod
    def bernoulli(p: float) -> "EdgeDistribution":
        """Canonical {0,1} distribution with mass ``p`` at zero."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if p == 0.0:
            return EdgeDistribution.from_atoms([(1, 1.0)])
        if p == 1.0:
            return EdgeDistribution.from_atoms([(0, 1.0)])
        return EdgeDistribution.from_atoms([(0, p), (1, 1.0 - p)])

    @property
    def zero_mass(self) -> float:
        """Probability of a zero (open) edge."""
        for v, p in zip(self.values, self.probabilities):
            if v == 0:
                return p
        return 0.0

    @property
    def mean(self) -> float:
        return float(sum(float(v) * p for v, p in zip(self.values, self.probabilities)))

    def weight_scale(self) -> int:
        """Least common denominator of the atom values."""
        return math.lcm(*(v.denominator for v in self.values))

    def scaled_values(self) -> np.ndarray:
        s = self.weight_scale()
        return np.array([int(v * s) for v in self.values], dtype=np.int64)

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(np.asarray(self.probabilities, dtype=np.float64))
        c[-1] = 1.0
        return c


class Configuration:
    """Immutable assignment of weights to every edge of a box.

    Weights are stored as scaled integers in two dense arrays indexed by
    ``[y - y_min, x - x_min]`` of the edge anchor: horizontal edges in an
    ``(height+1, width)`` array, vertical edges in ``(height, width+1)``.
    """

    __slots__ = ("box", "distribution", "seed", "scale", "_h", "_v")

    def __init__(
        self,
        box: LatticeBox,
        distribution: EdgeDistribution,
        seed: SeedSpec,
        h_weights: np.ndarray,
        v_weights: np.ndarray,
    ):
        if h_weights.shape != (box.height + 1, box.width):
            raise ValueError("horizontal weight array has wrong shape")
        if v_weights.shape != (box.height, box.width + 1):
            raise ValueError("vertical weight array has wrong shape")
        self.box = box
        self.distribution = distribution
        self.seed = seed
        self.scale = distribution.weight_scale()
        h_weights.setflags(write=False)
        v_weights.setflags(write=False)
        self._h = h_weights
        self._v = v_weights

    # -- raw array access (read-only views) used by the algorithm modules
    @property
    def h_weights(self) -> np.ndarray:
        return self._h

    @property
    def v_weights(self) -> np.ndarray:
        return self._v

    def weight_scaled(self, edge: Edge) -> int:
        if not self.box.contains_edge(edge):
            raise ValueError(f"{edge} outside configuration box {self.box}")
        iy = edge.y - self.box.y_min
        ix = edge.x - self.box.x_min
        if edge.orientation == HORIZONTAL:
            return int(self._h[iy, ix])
        return int(self._v[iy, ix])

    def unscale(self, scaled: int):
        """Exact unscaled value: ``int`` when the scale divides evenly,
        ``Fraction`` otherwise."""
        if self.scale == 1:
            return scaled
        f = Fraction(scaled, self.scale)
        return int(f) if f.denominator == 1 else f

    def weight(self, edge: Edge):
        return self.unscale(self.weight_scaled(edge))

    def total_edges(self) -> int:
        return self.box.edge_count()

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Configuration)
            and self.box == other.box
            and self.scale == other.scale
            and np.array_equal(self._h, other._h)
            and np.array_equal(self._v, other._v)
        )

    def __repr__(self) -> str:
        return (
            f"Configuration(box={self.box}, seed={self.seed}, "
            f"{self.total_edges()} edges)"
        )


def sample_configuration(
    box: LatticeBox, dist: EdgeDistribution, seed: SeedSpec
) -> Configuration:
    """Sample i.i.d. edge weights; a pure function of its arguments.

    The canonical edge order (row-major, horizontal before vertical) is
    the dump order below; weights themselves are derived per edge from
    the seed and the edge coordinates, so nested boxes sampled with the
    same seed agree on shared edges.
    """
    key = seed.stream_key()
    cum = dist.cumulative()
    scaled = dist.scaled_values()

    ny, nx = box.height, box.width
    # horizontal anchors: x in [x_min, x_max), y in [y_min, y_max]
    hx = np.arange(box.x_min, box.x_max, dtype=np.int64)
    hy = np.arange(box.y_min, box.y_max + 1, dtype=np.int64)
    h_codes = _edge_codes(
        0,
        np.broadcast_to(hx[None, :], (ny + 1, nx)),
        np.broadcast_to(hy[:, None], (ny + 1, nx)),
    )
    # vertical anchors: x in [x_min, x_max], y in [y_min, y_max)
    vx = np.arange(box.x_min, box.x_max + 1, dtype=np.int64)
    vy = np.arange(box.y_min, box.y_max, dtype=np.int64)
    v_codes = _edge_codes(
        1,
        np.broadcast_to(vx[None, :], (ny, nx + 1)),
        np.broadcast_to(vy[:, None], (ny, nx + 1)),
    )

    if len(scaled) == 1:
        h = np.full(h_codes.shape, scaled[0], dtype=np.int64)
        v = np.full(v_codes.shape, scaled[0], dtype=np.int64)
    else:
        h_u = _uniforms(key, h_codes)
        v_u = _uniforms(key, v_codes)
        h = scaled[np.searchsorted(cum, h_u, side="right")]
        v = scaled[np.searchsorted(cum, v_u, side="right")]
    return Configuration(box, dist, seed, np.ascontiguousarray(h), np.ascontiguousarray(v))


def is_open(config: Configuration, edge: Edge) -> bool:
    """True iff the edge weight is exactly zero."""
    return config.weight_scaled(edge) == 0


def empirical_zero_fraction(config: Configuration) -> float:
    """Fraction of open edges; sampling sanity check."""
    total = config.total_edges()
    if total == 0:
        raise ValueError("box has no edges")
    zeros = int(np.count_nonzero(config.h_weights == 0)) + int(
        np.count_nonzero(config.v_weights == 0)
    )
    return zeros / total


def _exact_decimal(value: Fraction) -> str:
    """Exact decimal rendering; falls back to ``p/q`` for denominators
    that are not of the form 2^a 5^b."""
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num)
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    k = max(twos, fives)
    scaled = num * 10**k // den
    digits = str(scaled).rjust(k + 1, "0")
    return f"{digits[:-k]}.{digits[-k:]}"


def dump_configuration(config: Configuration) -> str:
    """Golden-test dump: header then one line per edge in canonical order.

    Format: ``box x_min x_max y_min y_max`` followed by ``H|V x y weight``
    lines with exact decimal weights.
    """
    b = config.box
    lines = [f"box {b.x_min} {b.x_max} {b.y_min} {b.y_max}"]
    for e in b.edges():
        w = config.weight(e)
        w_frac = w if isinstance(w, Fraction) else Fraction(w)
        lines.append(f"{e.orientation} {e.x} {e.y} {_exact_decimal(w_frac)}")
    return "\n".join(lines)


def load_configuration_weights(text: str) -> dict[Edge, Fraction]:
    """Parse a dump back into an edge-to-weight map (round-trip tests)."""
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("box "):
        raise ValueError("missing box header")
    out: dict[Edge, Fraction] = {}
    for line in lines[1:]:
        o, xs, ys, ws = line.split()
        out[Edge(o, int(xs), int(ys))] = Fraction(ws)
    return out


def vertices_array(box: LatticeBox) -> tuple[np.ndarray, np.ndarray]:
    """Meshgrid of vertex coordinates in row-major layout."""
    xs = np.arange(box.x_min, box.x_max + 1, dtype=np.int64)
    ys = np.arange(box.y_min, box.y_max + 1, dtype=np.int64)
    return np.meshgrid(xs, ys)


def flat_index(box: LatticeBox, v: Vertex) -> int:
    """Row-major flat index of a vertex inside ``box``."""
    if not box.contains_vertex(v):
        raise ValueError(f"{v} outside {box}")
    return (v[1] - box.y_min) * (box.width + 1) + (v[0] - box.x_min)


def from_flat_index(box: LatticeBox, idx: int) -> Vertex:
    w = box.width + 1
    return (box.x_min + idx % w, box.y_min + idx // w)
