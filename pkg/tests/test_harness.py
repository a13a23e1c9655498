import json
import time

import numpy as np
import pytest
from pydantic import ValidationError

from app import __version__
from app.core.enums import EvolutionMode, MatcherKind
from app.core.exceptions import ConfigError, FitError, ReplayMismatchError
from app.schemas.run import RunConfig, SweepRequest, load_run_config, load_sweep_request, make_run_config
from app.services import harness


def test_run_config_derives_defaults():
    config = RunConfig(n=16)
    assert config.matcher is MatcherKind.INTERLEAVED
    assert config.mode is EvolutionMode.TWO_SIDED
    assert config.warmup_t == 2 * 16 * 16 * 4
    assert config.sample_every == 4
    assert config.max_t == config.warmup_t + 4 * config.warmup_t

    one_sided = RunConfig(n=16, matcher=MatcherKind.ONE_SIDED)
    assert one_sided.mode is EvolutionMode.ONE_SIDED_B
    assert one_sided.warmup_t == 4 * 16 * 4

    capped = RunConfig(n=16, max_t=100)
    assert capped.warmup_t == 100


def test_run_config_survives_a_json_round_trip():
    config = RunConfig(n=9, alpha=2, seed=4)
    assert RunConfig.model_validate(config.model_dump(mode="json")) == config


@pytest.mark.parametrize(
    "fields",
    [
        {"n": 8, "matcher": "one_sided", "mode": "two_sided"},
        {"n": 8, "matcher": "interleaved", "mode": "one_sided_b"},
        {"n": 8, "warmup_t": 50, "max_t": 40},
        {"n": 0},
        {"n": 8, "alpha": -1},
        {"n": 8, "c_window": 0},
        {"n": 8, "colour": "red"},
    ],
)
def test_invalid_run_configs(fields):
    with pytest.raises(ValidationError):
        RunConfig(**fields)
    with pytest.raises(ConfigError):
        make_run_config(**fields)


def test_yaml_configs(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("n: 6\nalpha: 2\nmatcher: simple\nseed: 3\n")
    config = load_run_config(path, seed=5)
    assert (config.n, config.alpha, config.matcher, config.seed) == (6, 2, MatcherKind.SIMPLE, 5)

    sweep_path = tmp_path / "sweep.yaml"
    sweep_path.write_text("ns: [4, 8, 16]\nmatchers: [simple, interleaved]\nreplications: 2\n")
    request = load_sweep_request(sweep_path)
    assert len(request.configs()) == 12

    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "list.yaml")
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.yaml")


def small_config(**overrides):
    fields = dict(n=6, alpha=1, matcher=MatcherKind.INTERLEAVED, seed=11, max_t=1500, warmup_t=300)
    fields.update(overrides)
    return RunConfig(**fields)


def test_run_writes_reproducible_artifacts(tmp_path):
    config = small_config()
    _, manifest = harness.run(config, tmp_path / "first")
    harness.run(config, tmp_path / "second")
    for name in (harness.TIMESERIES, harness.EVENTS, harness.FINAL_PROFILE, harness.RUNS):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()
    written = json.loads((tmp_path / "first" / harness.MANIFEST).read_text())
    assert written["code_version"] == __version__
    assert written["config"]["seed"] == 11
    assert manifest.t_final == 1500
    assert manifest.events == 1500
    assert manifest.query_count + manifest.idle_steps == 1500
    header = (tmp_path / "first" / harness.TIMESERIES).read_text().splitlines()[0]
    assert header == "t,blocking_pairs,queries,proposals,runs_completed,critical_events"


def test_static_control_without_evolution(tmp_path):
    record, manifest = harness.run(small_config(matcher=MatcherKind.STATIC_GS, alpha=0), tmp_path)
    assert manifest.runs_completed == 1
    assert manifest.proposals >= 6
    assert manifest.summary.median == 0
    assert set(record.to_frame()["blocking_pairs"]) == {0}


def test_summary_ignores_warmup_samples():
    config = small_config()
    record, manifest = harness.run(config, write=False)
    frame = record.to_frame()
    steady = frame[frame["t"] >= config.warmup_t]["blocking_pairs"]
    assert manifest.summary.samples == len(steady)
    assert manifest.summary.median == float(steady.median())


def test_different_seeds_diverge():
    first, _ = harness.run(small_config(seed=1), write=False)
    second, _ = harness.run(small_config(seed=2), write=False)
    assert first.to_csv() != second.to_csv()


def test_replay_confirms_and_detects_tampering(tmp_path):
    harness.run(small_config(), tmp_path)
    report = harness.replay(tmp_path)
    assert report.ok
    assert report.events_identical and report.event_replay_matches

    csv_path = tmp_path / harness.TIMESERIES
    csv_path.write_text(csv_path.read_text().replace("\n0,", "\n0,9", 1))
    assert not harness.replay(tmp_path, strict=False).csv_identical
    with pytest.raises(ReplayMismatchError):
        harness.replay(tmp_path)


def test_replay_without_an_event_log(tmp_path):
    harness.run(small_config(record_events=False), tmp_path)
    assert not (tmp_path / harness.EVENTS).exists()
    report = harness.replay(tmp_path)
    assert report.ok
    assert report.events_identical is None


def test_fit_growth_on_exact_series():
    ns = [64, 128, 256, 512]
    assert harness.fit_growth(ns, [5, 5, 5, 5]).slope == pytest.approx(0.0, abs=1e-12)
    assert harness.fit_growth(ns, [0, 0, 0, 0]).slope == pytest.approx(0.0, abs=1e-12)
    linear = harness.fit_growth(ns, ns)
    assert linear.slope == pytest.approx(1.0, abs=0.01)
    assert linear.ci_high - linear.ci_low == pytest.approx(0.0, abs=1e-6)
    quadratic_log = harness.fit_growth(ns, [np.log2(n) ** 2 for n in ns])
    assert 0 < quadratic_log.slope < 0.7


def test_fit_growth_needs_three_distinct_sizes():
    with pytest.raises(FitError):
        harness.fit_growth([64, 64, 128], [1, 2, 3])
    with pytest.raises(FitError):
        harness.fit_growth([64, 128, 256], [1, 2])


def quick_sweep(**overrides):
    fields = dict(ns=[4, 6, 8], matchers=["interleaved", "simple"], replications=2, warmup_scale=0.25, horizon_scale=0.25)
    fields.update(overrides)
    return SweepRequest(**fields)


def test_sweep_refuses_to_fit_two_sizes():
    with pytest.raises(FitError):
        harness.sweep(quick_sweep(ns=[4, 8]))
    summary = harness.sweep(quick_sweep(ns=[4, 8], fit=False, matchers=["interleaved"]))
    assert summary.fits == {}
    assert [g.n for g in summary.groups] == [4, 8]


def test_sweep_summaries_are_identical_serial_and_parallel(tmp_path):
    serial = harness.sweep(quick_sweep(parallelism=1), tmp_path)
    parallel = harness.sweep(quick_sweep(parallelism=2))
    assert serial == parallel
    assert set(serial.fits) == {"interleaved", "simple"}
    assert len(serial.replications) == 12
    assert (tmp_path / harness.SUMMARY).exists()


def test_tightness_report_on_seven_agents():
    report = harness.tightness_report(7, 3)
    assert report.blocking_pairs == 14
    assert report.lower_bound == 8
    assert report.kendall_max == 3
    assert report.approx_stable and report.gs_is_identity


@pytest.mark.parametrize("n", [64, 256, pytest.param(1024, marks=pytest.mark.slow)])
def test_tightness_lower_bound(n):
    k = int(np.ceil(np.log2(n)))
    report = harness.tightness_report(n, k)
    assert report.blocking_pairs >= (k - 1) * n - k * (k - 1)
    assert report.approx_stable


@pytest.mark.slow
def test_proposals_scale_like_n_log_n():
    from app.core.rng import stream
    from app.services.generators import random_profile
    from app.services.matchers import gale_shapley_static

    for n in (256, 512, 1024):
        proposals = [gale_shapley_static(random_profile(n, stream(seed, "profile")))[1] for seed in range(50)]
        assert 0.5 <= np.mean(proposals) / (n * np.log(n)) <= 2.0


@pytest.mark.slow
def test_one_sided_growth_is_polylogarithmic():
    summary = harness.sweep(SweepRequest(ns=[128, 256, 512, 1024], matchers=["one_sided"], replications=100, parallelism=-1))
    assert summary.fits["one_sided"].slope <= 0.35
    at_512 = next(group for group in summary.groups if group.n == 512)
    assert at_512.median <= 4 * np.log2(512)


@pytest.mark.slow
@pytest.mark.parametrize("n", [64, 128])
def test_interleaved_runs_propose_about_n_log_n_times(n):
    proposals = []
    for seed in range(3):
        sim = harness.simulate(RunConfig(n=n, matcher=MatcherKind.INTERLEAVED, seed=seed))
        proposals += [audit.trace.proposals for audit in sim.recorder.runs]
    assert proposals
    assert np.mean(proposals) <= 3 * n * np.log(n)


@pytest.mark.slow
def test_interleaving_beats_the_simple_matcher():
    summary = harness.sweep(
        SweepRequest(ns=[64, 128, 256, 512], matchers=["interleaved", "simple"], replications=10, parallelism=-1)
    )
    interleaved, simple = summary.fits["interleaved"].slope, summary.fits["simple"].slope
    assert interleaved <= 0.4
    assert simple >= 0.8
    assert interleaved < simple - 0.3


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_unwritable_output_directory_is_a_config_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigError, match="Cannot create output directory"):
        harness.run(RunConfig(n=4, max_t=50, warmup_t=10), blocker / "sub")
    request = SweepRequest(ns=[4], replications=1, fit=False, warmup_scale=0.25, horizon_scale=0.25)
    with pytest.raises(ConfigError):
        harness.sweep(request, blocker / "sub")


@pytest.mark.parametrize(("matcher", "owners_per_sort"), [(MatcherKind.INTERLEAVED, 1), (MatcherKind.SIMPLE, 2)])
def test_sort_outcomes_are_exported(tmp_path, matcher, owners_per_sort):
    config = small_config(matcher=matcher)
    _, manifest = harness.run(config, tmp_path)
    assert manifest.files["sorts"] == harness.SORTS
    rows = read_jsonl(tmp_path / harness.SORTS)
    generations = harness.simulate(config).matcher.state.approx_generation
    assert generations >= 1
    assert len(rows) == owners_per_sort * config.n * generations
    for row in rows:
        assert set(row) == {"generation", "owner", "comparisons", "started_at", "finished_at"}
        assert 1 <= row["generation"] <= generations
        assert row["started_at"] <= row["finished_at"]
        assert row["comparisons"] >= config.n - 1
    if owners_per_sort == 1:
        assert {row["owner"][0] for row in rows} == {"A"}
    else:
        assert {row["owner"][0] for row in rows} == {"A", "B"}


def test_static_control_sorts_nothing(tmp_path):
    harness.run(small_config(matcher=MatcherKind.STATIC_GS, alpha=0), tmp_path)
    assert (tmp_path / harness.SORTS).read_text() == ""


@pytest.mark.parametrize("parallelism", [0, -2])
def test_sweep_parallelism_must_be_a_valid_job_count(parallelism):
    with pytest.raises(ValidationError):
        SweepRequest(ns=[4], parallelism=parallelism)
    assert SweepRequest(ns=[4], parallelism=-1).parallelism == -1


def test_sweep_request_counts_total_steps():
    request = SweepRequest(ns=[4, 6], replications=3, fit=False)
    assert request.total_steps() == sum(config.max_t for config in request.configs())
    assert request.total_steps() == 3 * (RunConfig(n=4).max_t + RunConfig(n=6).max_t)


@pytest.mark.slow
def test_interleaved_run_at_256_agents_within_budget(tmp_path):
    n = 256
    max_t = 8 * n * n * int(np.ceil(np.log2(n)))
    config = RunConfig(n=n, alpha=1, matcher=MatcherKind.INTERLEAVED, seed=0, max_t=max_t, warmup_t=max_t // 4)
    start = time.perf_counter()
    _, manifest = harness.run(config, tmp_path)
    assert time.perf_counter() - start < 60
    assert manifest.t_final == max_t
    assert manifest.runs_completed >= 1
