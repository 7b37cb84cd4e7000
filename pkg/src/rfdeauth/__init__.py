"""Presence-aware workstation deauthentication from wireless channel
measurements, with a synthetic office simulator and evaluation harness."""

from .config import ENTRY_LABEL, Config, StreamId, load_config
from .detection import (MovementDetector, VariationWindow,
                        detect_variation_windows, kde_estimate,
                        percentile_threshold, sum_std)
from .classify import (Sample, WindowClassifier, auto_label,
                       extract_features, train)
from .activity import IdleTracker, InputTrace, idle_set, simulate_inputs
from .controller import DeauthController, run_controller
from .simulate import (FloorPlan, GroundTruth, MovementScript, RssiTrace,
                       attenuation, generate_trace, read_trace, write_trace)

__version__ = "0.1.0"

__all__ = [
    "Config", "ENTRY_LABEL", "StreamId", "load_config",
    "MovementDetector", "VariationWindow", "detect_variation_windows",
    "kde_estimate", "percentile_threshold", "sum_std",
    "Sample", "WindowClassifier", "auto_label",
    "extract_features", "train",
    "IdleTracker", "InputTrace", "idle_set", "simulate_inputs",
    "DeauthController", "run_controller",
    "FloorPlan", "GroundTruth", "MovementScript", "RssiTrace",
    "attenuation", "generate_trace", "read_trace", "write_trace",
    "__version__",
]
