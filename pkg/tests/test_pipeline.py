import io
import json

import numpy as np
import pytest

from linkanomaly.aggregate import aggregate_scores
from linkanomaly.dto import DynamicThreshold
from linkanomaly.errors import PostParseError, StreamOrderError
from linkanomaly.mention import MentionModel, Post
from linkanomaly.pipeline import (
    OUTPUT_FILES,
    PipelineConfig,
    emit_results,
    parse_post,
    read_posts,
    rho_sweep,
    run_pipeline,
    write_posts,
)
from linkanomaly.sdnml import two_layer_score
from linkanomaly.synthetic import DAY, SyntheticScenario, generate_synthetic_stream

FAST = PipelineConfig(ar_order=3, kappa=3, dto_warmup=30, burst_warmup=3600.0)


@pytest.fixture(scope="module")
def posts():
    sc = SyntheticScenario(n_users=40, duration=DAY, emergence_time=0.75 * DAY, seed=1)
    return generate_synthetic_stream(sc)


def test_parse_examples():
    p = parse_post('{"t": 100, "user": "bob", "mentions": ["alice", "john"]}')
    assert (p.time, p.user, p.mentions, p.k) == (100.0, "bob", ("alice", "john"), 2)
    assert parse_post('{"t": 100, "user": "bob", "mentions": []}').k == 0
    with pytest.raises(PostParseError) as err:
        parse_post('{"t": "x", "user": "bob", "mentions": []}', line_number=7)
    assert err.value.field == "t" and err.value.line_number == 7 and "line 7" in str(err.value)


def test_parse_tsv_and_errors():
    assert parse_post("12.5\tbob\talice,john").mentions == ("alice", "john")
    assert parse_post("12.5\tbob\t").k == 0
    assert parse_post("12.5\tbob").k == 0
    cases = {
        '{"user": "bob", "mentions": []}': "t",
        '{"t": 1, "mentions": []}': "user",
        '{"t": 1, "user": "bob"}': "mentions",
        '{"t": 1, "user": "bob", "mentions": "alice"}': "mentions",
        '{"t": 1, "user": "", "mentions": []}': "user",
        '{"t": 1, "user": "bob", "mentions": ["a"], "k": 3}': "k",
        "abc\tbob\t": "t",
        "1\tbob\ta,,b": "mentions",
    }
    for line, field in cases.items():
        with pytest.raises(PostParseError) as err:
            parse_post(line)
        assert err.value.field == field
    with pytest.raises(PostParseError):
        parse_post("{not json")


def test_read_write_round_trip(tmp_path, posts):
    path = tmp_path / "posts.jsonl"
    assert write_posts(posts[:50], path) == 50
    assert list(read_posts(path)) == posts[:50]
    text = "# comment\n\n1\tbob\talice\n"
    assert list(read_posts(io.StringIO(text))) == [Post(1.0, "bob", ("alice",))]


def test_config_validation_and_loading(tmp_path):
    with pytest.raises(ValueError):
        PipelineConfig(rho=1.5)
    with pytest.raises(ValueError):
        PipelineConfig(lambda0=0.1, lambda1=0.01)
    with pytest.raises(ValueError):
        PipelineConfig.from_mapping({"nonsense": 1})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"rho": 0.1, "kappa": 5}))
    cfg = PipelineConfig.from_file(path)
    assert (cfg.rho, cfg.kappa, cfg.ar_order) == (0.1, 5, 30)
    assert PipelineConfig.from_mapping(cfg.to_dict()) == cfg


def test_defaults_follow_reference_settings():
    cfg = PipelineConfig()
    assert (cfg.kappa, cfg.ar_order, cfg.rho, cfg.n_bins, cfg.lambda_h, cfg.r_h) == (15, 30, 0.05, 20, 0.01, 0.005)
    assert (cfg.lambda0, cfg.lambda1, cfg.p_switch) == (0.001, 0.01, 0.3)
    assert (cfg.window, cfg.tau_changepoint, cfg.tau_burst) == (30 * DAY, 60.0, 1.0)


def test_empty_input():
    art = run_pipeline([], FAST)
    assert art.insufficient
    s = art.summary()
    assert s["changepoint"]["status"] == "insufficient data"
    assert s["changepoint"]["# of detections"] == 0
    assert s["changepoint"]["1st detection time"] is None


def test_too_short_input_reports_insufficient_data():
    art = run_pipeline([Post(float(i), "u", ()) for i in range(10)], FAST)
    assert art.insufficient and art.change is None
    assert any("change-point" in d for d in art.diagnostics)


def test_out_of_order_input_is_rejected():
    with pytest.raises(StreamOrderError):
        run_pipeline([Post(10.0, "u", ()), Post(5.0, "u", ())], FAST)


def test_pipeline_equals_manual_composition(posts):
    art = run_pipeline(posts, FAST)
    model = MentionModel()
    scores = np.array([model.observe(p) for p in posts])
    assert np.array_equal(scores, art.scores)
    series = aggregate_scores([p.time for p in posts], scores, 60.0, origin=0.0)
    assert np.array_equal(series.values, art.series.values)
    first, second = FAST.sdnml_configs()
    change = two_layer_score(series.values, first, second)
    assert np.array_equal(change.score, art.change.score)
    dt = DynamicThreshold(**FAST.dto_kwargs())
    alarms = [dt.step(s)[1] for s in change.score]
    assert alarms == art.alarms.tolist()


def test_time_origin_invariance(posts):
    shift = 1_000_000 * 60.0
    moved = [Post(p.time + shift, p.user, p.mentions) for p in posts]
    a, b = run_pipeline(posts, FAST), run_pipeline(moved, FAST)
    assert np.array_equal(a.scores, b.scores)
    assert np.array_equal(a.change.score, b.change.score)
    assert np.array_equal(a.changepoint_alarm_times + shift, b.changepoint_alarm_times)


def test_outputs(tmp_path, posts):
    cfg = FAST.replace(reference_time=0.75 * DAY)
    art = run_pipeline(posts, cfg)
    paths = emit_results(art, tmp_path / "out")
    assert sorted(p.name for p in paths.values()) == sorted(OUTPUT_FILES)

    lines = paths["scores.csv"].read_text().splitlines()
    assert lines[0] == "time,user,k,score" and len(lines) == len(posts) + 1
    lines = paths["aggregated.csv"].read_text().splitlines()
    assert lines[0] == "window_start,s_prime" and len(lines) == len(art.series) + 1
    lines = paths["changepoints.csv"].read_text().splitlines()
    assert lines[0] == "window_start,score,threshold,alarm" and len(lines) == len(art.change.score) + 1
    lines = paths["bursts.csv"].read_text().splitlines()
    assert lines[0] == "time,state,alarm" and len(lines) == len(art.burst_path.times) + 1

    summary = json.loads(paths["summary.json"].read_text())
    block = summary["changepoint"]
    assert block["# of detections"] == int(art.alarms.sum())
    first = block["1st detection time"]
    assert first is None or first >= 0.75 * DAY
    assert summary["parameters"]["rho"] == cfg.rho


def test_outputs_are_deterministic(tmp_path, posts):
    for name in ("a", "b"):
        emit_results(run_pipeline(posts, FAST), tmp_path / name)
    for f in OUTPUT_FILES:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_write_failure_names_the_path(tmp_path, posts):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit_results(run_pipeline(posts[:5], FAST), blocker / "sub")


def test_detectors_can_be_disabled(posts):
    art = run_pipeline(posts, FAST.replace(burst=False))
    assert art.burst_path is None and art.change is not None
    assert art.summary()["burst"]["status"] == "disabled"
    art = run_pipeline(posts, FAST.replace(changepoint=False))
    assert art.change is None and art.burst_path is not None


def test_rho_sweep_is_monotone(posts):
    art = run_pipeline(posts, FAST.replace(burst=False))
    counts = [row["# of detections"] for row in rho_sweep(art, (0.01, 0.05, 0.1, 0.3))]
    assert counts == sorted(counts)


def test_explicit_burst_threshold(posts):
    art = run_pipeline(posts, FAST.replace(changepoint=False, filter_threshold=1e9))
    assert len(art.burst_path.times) == 0 and art.insufficient


def test_alarm_events_match_alarm_times(posts):
    art = run_pipeline(posts, FAST.replace(burst=False))
    events = art.alarm_events
    assert [e.time for e in events] == art.changepoint_alarm_times.tolist()
    assert all(e.score >= e.threshold for e in events)
