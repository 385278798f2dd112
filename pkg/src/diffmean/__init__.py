"""diffmean: heat-kernel maximum-likelihood location statistics.

Diffusion t-means generalize Gaussian maximum likelihood to curved spaces:
the t-mean of a distribution is the most likely origin of a Brownian
motion observed at time t.  The package evaluates the heat kernels of
R^m, S^1, S^m (m >= 2) and H^3, fits diffusion and Frechet means by
Riemannian gradient descent, estimates the diffusion time, computes the
analytic uniqueness bounds for the spherical reference distributions, and
runs the bootstrap rate experiments that detect smeary behavior.
"""

from .kernels import (
    CIRCLE,
    EUCLIDEAN,
    HYPERBOLIC3,
    SPHERE,
    FixedTerms,
    KernelError,
    KernelPrecisionError,
    KernelSpec,
    SeriesEval,
    TailBound,
    TruncationNotConvergedError,
    circle_heat,
    euclidean_heat,
    gegenbauer,
    hyperbolic3_heat,
    sphere_heat,
    sphere_heat_deriv,
    sphere_heat_dt,
    sphere_log_heat,
)
from .manifold import (
    CutLocusError,
    exp_map,
    geodesic_distance,
    log_map,
    north_pole,
    tangent_project,
    unit_vector,
    y_delta,
)
from .sampling import (
    BimodalBrownianNormal,
    BrownianNormal,
    EmpiricalSample,
    EuclideanGaussian,
    HemispherePointMass,
    TwoPole,
    brownian_sample,
    draw,
    ingest_latlon_csv,
)
from .estimators import (
    DiffusionMean,
    DiffusionVariance,
    EstimateReport,
    FrechetMean,
    JointDiffusionMean,
    OptimizerConfig,
    estimate_diffusion_mean,
    estimate_frechet_mean,
    estimate_joint,
    estimate_t,
    riemannian_gradient,
    sample_log_likelihood,
)
from .analysis import (
    LikelihoodProfile,
    SmearinessOrder,
    SmearinessReport,
    classify_smeariness,
    delta_bound,
    frechet_limit_check,
    hemisphere_profile,
    lambda_bound,
    sigma_bound,
    small_t_gap,
    two_pole_profile,
)
from .graph import (
    MultiGraph,
    VertexDistribution,
    graph_diffusion_means,
    graph_likelihood,
    transition_matrix,
)
from .experiments import (
    ScalingTable,
    bootstrap_scaling,
    export_table,
    fit_slope,
    import_table,
    t_trace,
)

__version__ = "0.1.0"
