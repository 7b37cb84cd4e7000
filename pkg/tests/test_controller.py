import numpy as np
import pytest

from rfdeauth.activity import InputTrace
from rfdeauth.config import Config
from rfdeauth.controller import (ALERT, ALERT_ON, AUTHENTICATED, CANCEL,
                                 DEAUTHENTICATE, SCREENSAVER, SCREENSAVER_ON,
                                 TIMEOUT_DEAUTH, ActionRecord,
                                 WorkstationState, apply_rule1, apply_rule2,
                                 read_actions, run_controller, write_actions)
from rfdeauth.detection import ANOMALOUS
from rfdeauth.simulate import RssiTrace

CFG = Config()  # defaults: t_delta=4.5, t_id=5, t_ss=3, T=300, 4 Hz
WS = ["w_1", "w_2", "w_3"]


def flat_trace(duration_s: float) -> RssiTrace:
    n = int(duration_s * 4)
    return RssiTrace(4.0, ((1, 2),), np.full((1, n), -45.0))


def window_decisions(t1: float, length: float, fs: float = 4.0):
    k1 = int(round(t1 * fs))
    k2 = int(round((t1 + length) * fs))
    return {k: ANOMALOUS for k in range(k1, k2)}


def typing(last: float, stop: float | None = None, start: float = 1.0):
    """Keystrokes every second from start until last (exclusive of stop)."""
    end = last if stop is None else stop
    return np.arange(start, end + 1e-9, 1.0)


def actions_of(log, action):
    return [a for a in log if a.action == action]


def test_case_a_deauth_at_window_start_plus_t_delta():
    t1 = 30.25
    trace = flat_trace(60.0)
    inputs = InputTrace({"w_1": typing(30.0), "w_2": typing(59.0),
                         "w_3": typing(59.0)})
    log = run_controller(trace, window_decisions(t1, 6.0), inputs,
                         lambda s: "w_1", CFG, WS)
    deauths = actions_of(log, DEAUTHENTICATE)
    assert len(deauths) == 1
    assert deauths[0].workstation == "w_1"
    assert deauths[0].t == pytest.approx(t1 + CFG.t_delta, abs=0.25)


def test_case_b_misclassified_deauth_at_last_input_plus_8():
    t1 = 30.25
    trace = flat_trace(60.0)
    inputs = InputTrace({"w_1": typing(30.0), "w_2": typing(59.0),
                         "w_3": typing(59.0)})
    log = run_controller(trace, window_decisions(t1, 6.0), inputs,
                         lambda s: "w_2", CFG, WS)
    # misclassification: w_2 took input, so rule 1 does nothing; w_1 rides
    # the alert -> screen saver -> deauthentication escalation
    ss = actions_of(log, SCREENSAVER_ON)
    deauths = actions_of(log, DEAUTHENTICATE)
    assert [a.workstation for a in ss] == ["w_1"]
    assert ss[0].t == pytest.approx(30.0 + CFG.t_id, abs=0.25)
    assert [a.workstation for a in deauths] == ["w_1"]
    assert deauths[0].t == pytest.approx(30.0 + CFG.t_id + CFG.t_ss, abs=0.25)


def test_case_c_timeout_deauth_at_T():
    trace = flat_trace(340.0)
    inputs = InputTrace({"w_1": typing(30.0), "w_2": typing(339.0),
                         "w_3": typing(339.0)})
    log = run_controller(trace, {}, inputs, lambda s: "w_1", CFG, WS)
    timeouts = actions_of(log, TIMEOUT_DEAUTH)
    assert [a.workstation for a in timeouts] == ["w_1"]
    assert timeouts[0].t == pytest.approx(30.0 + CFG.T, abs=0.25)


def test_seated_user_cancel_restores_authenticated():
    t1 = 30.25
    trace = flat_trace(60.0)
    # w_3 pauses typing from 33 to 36, then resumes while still noisy
    w3 = np.concatenate([typing(33.0), np.arange(36.0, 59.0, 1.0)])
    inputs = InputTrace({"w_1": typing(30.0), "w_2": typing(59.0), "w_3": w3})
    log = run_controller(trace, window_decisions(t1, 6.0), inputs,
                         lambda s: "w_1", CFG, WS)
    alerts = [a for a in log if a.action == ALERT_ON and a.workstation == "w_3"]
    cancels = [a for a in log if a.action == CANCEL and a.workstation == "w_3"]
    assert alerts and cancels
    assert cancels[0].t == pytest.approx(36.0, abs=0.01)
    assert not [a for a in log
                if a.action == DEAUTHENTICATE and a.workstation == "w_3"]


def test_constant_typist_never_deauthenticated_before_timeout():
    trace = flat_trace(120.0)
    inputs = InputTrace({w: typing(119.0) for w in WS})
    decisions = window_decisions(30.0, 60.0)  # one hour-long noisy stretch
    log = run_controller(trace, decisions, inputs, lambda s: "w_1", CFG, WS)
    assert not actions_of(log, DEAUTHENTICATE)
    assert not actions_of(log, TIMEOUT_DEAUTH)


def test_stale_idleness_is_not_retroactively_escalated():
    # w_3 stopped typing long before the noisy episode: it gets an alert but
    # no screen saver; the T time-out remains its backstop
    t1 = 60.25
    trace = flat_trace(100.0)
    inputs = InputTrace({"w_1": typing(60.0), "w_2": typing(99.0),
                         "w_3": typing(20.0)})
    log = run_controller(trace, window_decisions(t1, 6.0), inputs,
                         lambda s: "w_1", CFG, WS)
    assert [a.workstation for a in actions_of(log, ALERT_ON)] == ["w_3"]
    assert not [a for a in actions_of(log, SCREENSAVER_ON)
                if a.workstation == "w_3"]


def test_deauth_once_per_episode_resume_allows_next_episode():
    trace = flat_trace(120.0)
    decisions = {**window_decisions(30.0, 6.0), **window_decisions(80.0, 6.0)}
    w1 = np.concatenate([typing(30.0), [50.0], [79.9]])
    inputs = InputTrace({"w_1": w1, "w_2": typing(119.0),
                         "w_3": typing(119.0)})
    log = run_controller(trace, decisions, inputs, lambda s: "w_1", CFG, WS)
    deauths = actions_of(log, DEAUTHENTICATE)
    assert len(deauths) == 2
    assert deauths[0].t == pytest.approx(34.5, abs=0.25)
    assert deauths[1].t == pytest.approx(84.5, abs=0.25)


def test_no_resume_keeps_deauthenticated_terminal():
    trace = flat_trace(120.0)
    decisions = {**window_decisions(30.0, 6.0), **window_decisions(80.0, 6.0)}
    w1 = np.concatenate([typing(30.0), [50.0], [79.9]])
    inputs = InputTrace({"w_1": w1, "w_2": typing(119.0),
                         "w_3": typing(119.0)})
    log = run_controller(trace, decisions, inputs, lambda s: "w_1", CFG, WS,
                         resume_on_input=False)
    assert len(actions_of(log, DEAUTHENTICATE)) == 1


def test_replay_is_bit_identical():
    t1 = 30.25
    trace = flat_trace(90.0)
    inputs = InputTrace({"w_1": typing(30.0), "w_2": typing(89.0),
                         "w_3": typing(45.0)})
    decisions = window_decisions(t1, 8.0)
    a = run_controller(trace, decisions, inputs, lambda s: "w_1", CFG, WS)
    b = run_controller(trace, decisions, inputs, lambda s: "w_1", CFG, WS)
    assert a == b


def test_entry_label_takes_no_action():
    trace = flat_trace(60.0)
    inputs = InputTrace({w: typing(59.0) for w in WS})
    log = run_controller(trace, window_decisions(30.25, 6.0), inputs,
                         lambda s: "w_0", CFG, WS)
    assert not actions_of(log, DEAUTHENTICATE)
    assert not actions_of(log, SCREENSAVER_ON)


# --- rule unit tests --------------------------------------------------------


def fresh_states():
    return {w: WorkstationState(w) for w in WS}


def test_rule1_deauthenticates_idle_classified_station():
    states = fresh_states()
    actions = apply_rule1("w_2", {"w_1", "w_2"}, states, 10.0)
    assert actions == [ActionRecord(10.0, "w_2", DEAUTHENTICATE)]
    assert states["w_2"].status == "deauthenticated"


def test_rule1_entry_label_no_action():
    states = fresh_states()
    assert apply_rule1("w_0", {"w_1", "w_2", "w_3"}, states, 10.0) == []


def test_rule1_contradicted_by_input_no_action():
    states = fresh_states()
    assert apply_rule1("w_2", {"w_1", "w_3"}, states, 10.0) == []
    assert states["w_2"].status == AUTHENTICATED


def test_rule2_alerts_all_idle():
    states = fresh_states()
    actions = apply_rule2({"w_1", "w_2", "w_3"}, states, 10.0)
    assert {a.workstation for a in actions} == set(WS)
    assert all(states[w].status == ALERT for w in WS)


def test_rule2_skips_non_authenticated():
    states = fresh_states()
    states["w_1"].set(ALERT, 5.0)
    states["w_2"].set(SCREENSAVER, 5.0)
    states["w_3"].set("deauthenticated", 5.0)
    assert apply_rule2({"w_1", "w_2", "w_3"}, states, 10.0) == []
    assert states["w_3"].status == "deauthenticated"


def test_rule2_never_alerts_typing_station():
    states = fresh_states()
    actions = apply_rule2({"w_1"}, states, 10.0)
    assert {a.workstation for a in actions} == {"w_1"}
    assert states["w_2"].status == AUTHENTICATED


def test_action_log_round_trip(tmp_path):
    log = [ActionRecord(34.75, "w_1", DEAUTHENTICATE),
           ActionRecord(35.0, "w_2", ALERT_ON)]
    path = tmp_path / "actions.csv"
    write_actions(log, path)
    assert read_actions(path) == log
