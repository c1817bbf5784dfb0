"""Sequential weak measurement of two polarization projectors on a single photon."""
from .detector import (
    DetectionFrame,
    DetectorConfig,
    MomentEstimate,
    estimate_moments,
    pixel_probabilities,
    sample_frame,
    subtract_background,
)
from .pointer import (
    CoupledState,
    Moments,
    PointerField,
    apply_coupling_psi,
    apply_coupling_v,
    exact_moments,
    initial_state,
    post_select,
    traced_polarization_coherence,
)
from .polarization import (
    H,
    PI_H,
    PI_V,
    V,
    Observable2x2,
    PolarizationState,
    WeakValue,
    linear_state,
    projector,
    sequential_weak_value,
    weak_value,
)
from .weakform import (
    CouplingConfig,
    WeakValueReport,
    approximation_error_scan,
    invert_moments,
    predict_mean,
    predict_xy_joint,
    predict_xy_sequential,
)

__version__ = "0.1.0"
