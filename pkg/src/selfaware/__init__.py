"""Self-awareness models for mobile agents.

Learns what "normal" looks like from demonstration trajectories (superstate
vocabulary + per-region dynamics), then flags deviations online with a Markov
jump particle filter; a fusion layer correlates this shared-level signal with
a private-layer series produced from first-person video.
"""

from .core import (
    DUMMY,
    AnomalySeries,
    GeneralizedState,
    Observation,
    Trajectory,
    WeightedMetric,
    load_series_csv,
    load_trajectory_csv,
    save_series_csv,
    save_trajectory_csv,
    state_to_vector,
    vector_to_state,
    weighted_distance,
)
from .errors import (
    AlignmentError,
    InvalidInputError,
    NumericalDegeneracyError,
    ParseError,
    SelfAwareError,
)
from .fusion import FusionConfig, JointSeries, align, changepoint_correlation, joint_verdict
from .mjpf import MjpfConfig, MjpfState, Particle, StepResult
from .scenario import (
    ABNORMAL,
    CURVE,
    STRAIGHT,
    LabeledTrajectory,
    ScenarioParams,
    generate_perimeter,
    generate_stop,
    generate_uturn,
    load_labeled,
    load_trajectory,
    save_labeled,
)
from .som import SomConfig, SomModel, best_matching_unit, quantization_error
from .unmotivated import KalmanBelief, NoiseConfig, predict_unmotivated, track, update_position
from .vocabulary import (
    Superstate,
    TransitionMatrix,
    Vocabulary,
    assign_superstate,
    build_vocabulary,
    learn_transitions,
    load_vocabulary_json,
    predict_state,
    save_vocabulary_json,
)

__version__ = "0.1.0"
