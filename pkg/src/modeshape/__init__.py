"""Mode and mode-shape estimation from multichannel ringdown measurements.

Part I slides a window over the recording and runs a real PCA followed by a
complex (Hilbert) PCA on each window; every complex component that oscillates
in the electromechanical band and decays exponentially becomes an
observation ``(f, sigma, G_1..G_M)``. Part II clusters the observations with
k-Means, picks k by the mean silhouette, and averages each cluster into a mode
estimate.
"""
from .clustering import (
    ClusteringResult,
    ModeEstimate,
    kmeans,
    merge_replicates,
    select_and_cluster,
    shape_errors,
    silhouette_score,
)
from .decomp import ComponentSelection, cpca, pca, two_layer
from .errors import ModeshapeError
from .kernels import BACKEND
from .observation import ModeObservation, ObservationSet, PipelineConfig, extract_observations, run_part1
from .synth import Event, ModeSpec, ScenarioSpec, generate, kundur_like
from .timeseries import ChannelSet, ingest, serialize, sliding_windows

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelSet",
    "ClusteringResult",
    "ComponentSelection",
    "Event",
    "ModeEstimate",
    "ModeObservation",
    "ModeSpec",
    "ModeshapeError",
    "ObservationSet",
    "PipelineConfig",
    "ScenarioSpec",
    "cpca",
    "extract_observations",
    "generate",
    "ingest",
    "kmeans",
    "kundur_like",
    "merge_replicates",
    "pca",
    "run_part1",
    "select_and_cluster",
    "serialize",
    "shape_errors",
    "silhouette_score",
    "sliding_windows",
    "two_layer",
]
