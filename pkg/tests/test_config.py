import dataclasses

import pytest

from rfdeauth.config import (Config, StreamId, all_streams, dumps_config,
                             load_config, loads_config, tick_of, time_of)
from rfdeauth.errors import ParseError, ValidationError


def test_defaults():
    cfg = Config()
    assert cfg.sample_rate_hz == 4.0
    assert cfg.d == 30.0
    assert cfg.t_delta == 4.5
    assert cfg.alpha == 5.0
    assert cfg.b == 100
    assert cfg.tau == 0.1
    assert cfg.t_id == 5.0
    assert cfg.t_ss == 3.0
    assert cfg.T == 300.0
    assert cfg.delta == 3.0
    assert cfg.ac_lag == 1
    assert cfg.entropy_bin_width == 1.0
    assert cfg.kde_bandwidth_rule == "silverman"


def test_load_config_file_values(tmp_path):
    path = tmp_path / "config.txt"
    path.write_text(
        "# timing parameters\n"
        "t_delta = 4.5\n"
        "t_id = 5\n"
        "t_ss = 3\n"
        "T = 300\n")
    cfg = load_config(path)
    assert cfg.t_delta == 4.5
    assert cfg.t_id == 5.0
    assert cfg.t_ss == 3.0
    assert cfg.T == 300.0


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "config.txt"
    path.write_text("")
    assert load_config(path) == Config()


def test_invariant_violation_names_key():
    with pytest.raises(ValidationError, match="tau"):
        loads_config("tau = 1.5")


@pytest.mark.parametrize("text,key", [
    ("alpha = 0", "alpha"),
    ("alpha = 100", "alpha"),
    ("b = 0", "b"),
    ("d = -1", "d"),
    ("t_delta = 400", "t_delta"),
])
def test_more_invariants(text, key):
    with pytest.raises(ValidationError, match=key):
        loads_config(text)


def test_parse_error_reports_line_and_key():
    with pytest.raises(ParseError, match="2"):
        loads_config("d = 30\nnot a pair")
    with pytest.raises(ParseError, match="frobnicate"):
        loads_config("frobnicate = 1")
    with pytest.raises(ParseError, match="d"):
        loads_config("d = thirty")


def test_missing_file():
    with pytest.raises(ParseError, match="nope.txt"):
        load_config("nope.txt")


def test_round_trip_identity():
    cfg = Config(sample_rate_hz=8, d=12.5, alpha=2.5, b=37, tau=0.25,
                 kde_bandwidth_rule=0.75)
    assert loads_config(dumps_config(cfg)) == cfg
    assert loads_config(dumps_config(Config())) == Config()


def test_round_trip_random_configs():
    import numpy as np

    rng = np.random.default_rng(3)
    for _ in range(25):
        cfg = Config(
            sample_rate_hz=float(rng.integers(1, 10)),
            d=float(rng.uniform(0.5, 60)),
            t_delta=float(rng.uniform(0.5, 10)),
            alpha=float(rng.uniform(0.5, 99)),
            b=int(rng.integers(1, 500)),
            tau=float(rng.uniform(0, 1)),
            delta=float(rng.uniform(0.5, 5)),
        )
        assert loads_config(dumps_config(cfg)) == cfg


def test_stream_ids():
    streams = all_streams([3, 1, 2])
    assert len(streams) == 6  # m * (m - 1)
    assert streams[0] == StreamId(1, 2)
    assert all(s.tx != s.rx for s in streams)
    with pytest.raises(ValidationError):
        all_streams([1, 1, 2])


def test_time_grid():
    assert tick_of(4.5, 4) == 18
    assert time_of(18, 4) == 4.5
    with pytest.raises(ValidationError):
        tick_of(-1.0, 4)


def test_config_is_immutable():
    cfg = Config()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.d = 10.0
