"""Geometric entropy of weighted random graphs.

Lifts a weighted undirected graph to a parametric family of Gaussian models,
measures the log-volume of the resulting (pseudo-)Riemannian manifold by
regularized Monte Carlo integration, and exposes sweep tooling that locates
the giant-component transition as a knee in the normalized entropy curve.
"""

from .geometry import (
    DEFAULT_DET_TOL,
    DegenerateDeformationError,
    DeformedMatrix,
    MetricEvaluation,
    bare_metric,
    deformed_metric,
    fisher_metric_gaussian,
    in_theta_tilde,
    log_upsilon,
    psi_map,
    upsilon,
)
from .graphs import (
    ConstantWeights,
    Graph,
    ThetaCoupledWeights,
    WeightModel,
    gibbs_entropy,
    largest_component_size,
    materialize_adjacency,
    read_graph,
    sample_gnk,
    write_graph,
)
from .experiment import (
    CurveRow,
    EntropyCurve,
    KneeResult,
    SweepConfig,
    default_k_values,
    emit_csv,
    knee_location,
    read_csv,
    run_sweep,
)
from .volume import (
    DEFAULT_BOX_THETA_MAX,
    DEFAULT_BOX_THETA_MIN,
    DEFAULT_SWEEP_DET_TOL,
    EntropySample,
    EstimationFailureError,
    ParameterBox,
    VolumeEstimate,
    aggregate_entropy,
    baseline_log_volume,
    mc_log_volume,
    normalized_entropy_sample,
    upsilon_log_volume,
)

__version__ = "0.1.0"
