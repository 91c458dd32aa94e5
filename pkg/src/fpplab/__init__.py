"""Simulation laboratory for first-passage percolation on the square lattice.

Passage times, exact geodesic counting with an independent brute-force
oracle, critical-percolation geometry (lowest crossings, annulus circuits,
good/accessible squares, cluster statistics), growth-exponent estimation,
and a reproducible seeded experiment harness.
"""

__version__ = "0.1.0"

from .lattice import (
    Edge,
    DualEdge,
    LatticeBox,
    Annulus,
    LatticePath,
    annulus_sequence,
    dual_of,
    edge_endpoints,
    path_passage_time,
    primal_of,
)
from .randomfield import (
    Configuration,
    EdgeDistribution,
    SeedSpec,
    dump_configuration,
    empirical_zero_fraction,
    is_open,
    sample_configuration,
)
from .passage import (
    ConfinementCertificate,
    DistanceField,
    TightSubgraph,
    certify_confinement,
    distance_field,
    point_passage_time,
    tight_subgraph,
)
from .geodesics import (
    CountCertificate,
    GeodesicCount,
    GeodesicLengthStats,
    NotApplicable,
    count_geodesics_bruteforce,
    count_geodesics_exact,
    lower_bound_certificate,
    max_geodesic_length,
)
from .geometry import (
    AnnulusCircuit,
    Crossing,
    RegionSplit,
    UnitSquare,
    accessible_squares,
    detect_event_E,
    event_rectangle,
    good_squares,
    has_open_circuit,
    has_open_crossing,
    innermost_circuit,
    lowest_crossing,
    outermost_circuit,
    region_split,
    verify_three_arm,
)
from .clusters import (
    ClusterDecomposition,
    boundary_connected_sizes,
    largest_cluster_size,
    open_clusters,
)
from .estimators import (
    FitResult,
    LogGrowthFit,
    MuEstimate,
    SlopeSweep,
    estimate_mu,
    fit_log_growth,
    fit_power_law,
    slope_divergence_sweep,
    subcritical_slope,
)
