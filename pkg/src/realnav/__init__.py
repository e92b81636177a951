"""PointGoal navigation simulator over a geometric world model that serves,
at each step, the stored real image whose camera pose is nearest to the
agent, with configurable Gaussian sensor/actuator noise and SPL-based
evaluation."""

from realnav._kernels import BACKEND as KERNEL_BACKEND
from realnav.alignment import (
    AlignmentReport,
    Correspondence,
    align_database,
    estimate_similarity,
)
from realnav.engine import (
    Action,
    EpisodeSpec,
    SimConfig,
    StepObservation,
    Trajectory,
    generate_episodes,
    run_episode,
    run_suite,
)
from realnav.geometry import (
    Heading,
    Pose3,
    Pose6,
    SimilarityTransform,
    apply_similarity,
    heading_cosine,
    heading_from_angle,
    pose6_to_pose3,
)
from realnav.mapgrid import OccupancyGrid, PathResult, load_grid
from realnav.metrics import (
    EpisodeResult,
    MetricsReport,
    avg_distance_from_goal,
    compute_report,
    failure_histogram,
    spl,
    success_rate,
)
from realnav.noise import (
    ActuationOutcome,
    NoiseConfig,
    apply_actuation_noise,
    apply_sensor_noise,
    config_from_presets,
)
from realnav.retrieval import (
    ObservationRecord,
    RetrievalConfig,
    RetrievalIndex,
    RetrievalResult,
    build_index,
    parse_sfm_images,
    retrieve,
    retrieve_batch,
)

__version__ = "0.1.0"
