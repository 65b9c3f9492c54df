"""Persistent homology of demographic share data on geographic dual graphs."""

from .analytics import (
    DiagramDistanceMatrix,
    Embedding,
    OutlierReport,
    averaged_lof,
    classical_mds,
    dissimilarity_index,
    distance_matrix,
    lof_scores,
    pearson_r,
)
from .clustering import (
    ClusterResult,
    elbow_curve,
    frechet_mean,
    kmeans_diagrams,
    kmeanspp_init,
)
from .geo import (
    AttributeTable,
    DualGraph,
    IngestError,
    UnitRecord,
    Vertex,
    build_dual_graph,
    compute_shares,
    impute_low_population,
    read_geojson,
)
from .kernels import BACKEND
from .metrics import (
    bottleneck,
    diagonal_cost,
    ground_distance,
    total_persistence,
    wasserstein,
)
from .persistence import (
    DiagramError,
    DiagramPoint,
    PersistenceDiagram,
    cap_infinite,
    diagram_from_values,
    sublevel_diagram,
)

__version__ = "0.1.0"
