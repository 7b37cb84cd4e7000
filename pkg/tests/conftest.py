"""Shared fixtures: the reference scenario (built once per session) and a
small deterministic office used by controller and CLI tests."""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from rfdeauth.classify import Sample
from rfdeauth.config import Config
from rfdeauth.detection import DetectionResult, MovementDetector
from rfdeauth.evaluate import labeled_samples
from rfdeauth.scenario import (REFERENCE_NOISE_SIGMA, REFERENCE_SEED,
                               reference_config, reference_plan,
                               reference_script)
from rfdeauth.simulate import (FloorPlan, GroundTruth, MovementScript,
                               RssiTrace, generate_trace)


@dataclass
class ReferenceBundle:
    plan: FloorPlan
    script: MovementScript
    config: Config
    trace: RssiTrace
    truth: GroundTruth
    detection: DetectionResult
    samples: list[Sample]


@pytest.fixture(scope="session")
def reference() -> ReferenceBundle:
    plan = reference_plan()
    script = reference_script()
    config = reference_config()
    trace, truth = generate_trace(plan, script, config,
                                  noise_sigma=REFERENCE_NOISE_SIGMA,
                                  seed=REFERENCE_SEED)
    detection = MovementDetector(config).run(trace)
    kept = [w for w in detection.windows if w.duration >= config.t_delta]
    samples, _ = labeled_samples(trace, kept, truth, config)
    return ReferenceBundle(plan, script, config, trace, truth, detection,
                           samples)


MINI_CONFIG_TEXT = """\
# small-office test configuration
sample_rate_hz = 4
d = 1.0
"""

MINI_PLAN_TEXT = """\
width = 8.0
depth = 6.0
door = 4.0 0.0
walk_speed = 1.4

[sensors]
1 0.3 1.5
2 0.3 4.5
3 4.0 5.7
4 7.7 4.5
5 6.0 0.3
6 2.0 0.3

[workstations]
w_1 1.5 5.0
w_2 6.5 5.2
"""

MINI_SCRIPT_TEXT = """\
[events]
40.00 depart u1 w_1
45.10 exit u1
70.00 enter u1
85.00 depart u2 w_2
105.00 depart u1 w_1
125.00 depart u2 w_2
129.80 exit u2
160.00 enter u2
175.00 depart u1 w_1
195.00 depart u2 w_2
215.00 depart u1 w_1
219.80 exit u1
250.00 enter u1
265.00 depart u2 w_2
285.00 depart u1 w_1
305.00 depart u2 w_2
"""


@pytest.fixture()
def mini_files(tmp_path):
    config = tmp_path / "config.txt"
    plan = tmp_path / "plan.txt"
    script = tmp_path / "script.txt"
    config.write_text(MINI_CONFIG_TEXT)
    plan.write_text(MINI_PLAN_TEXT)
    script.write_text(MINI_SCRIPT_TEXT)
    return {"config": config, "plan": plan, "script": script, "dir": tmp_path}
