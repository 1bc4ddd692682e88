"""Joint target-number and DoA estimation with ITC-controlled orthogonal least squares."""

from .covariance import SampleCovariance, residual_covariance, sample_covariance
from .detectors import (
    AngleGrid,
    DetectorConfig,
    EstimationResult,
    Penalty,
    SaturatedSubspaceError,
    disjoint_itc_ols,
    hybrid_itc_ols,
    itc_ols_objective,
    joint_itc_ols,
    ml_exhaustive,
    ols_run,
    ols_select,
    rank_itc,
    residual_threshold,
    threshold_ols,
)
from .harness import ConfigError, ExperimentResult, ExperimentSpec, load_spec, run_experiment, write_outputs
from .linalg import (
    EigenSpectrum,
    SingularGramError,
    hermitian_eigendecompose,
    orthogonal_complement,
    projector,
    trace_real,
)
from .metrics import DetectionOutcome, MetricsReport, aggregate, classify, hungarian_assign
from .scene import (
    ObservationSet,
    RadarConfig,
    Scene,
    SceneBounds,
    Target,
    channel_coefficient,
    random_scene,
    steering_matrix,
    steering_vector,
    synthesize,
)

__version__ = "0.1.0"
