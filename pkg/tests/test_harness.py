"""Run orchestration: CSV schema, aggregates, sweeps, reports, config parsing."""

import dataclasses
import math

import numpy as np
import pytest

from opac import (
    CSV_HEADER,
    RunConfig,
    default_schedule,
    parse_config_text,
    parse_seed_spec,
    run_experiment,
    stationarity_report,
    sweep,
)

BASE = dict(
    algorithm="alg1",
    chain_n=4,
    total_steps=4_000,
    eval_every=1_000,
    diag_every=2_000,
    eval_episodes=3,
    seeds=(0, 1),
)


def small_cfg(tmp_path, name="m.csv", **over):
    kw = dict(BASE, output_path=str(tmp_path / name))
    kw.update(over)
    return RunConfig(**kw)


def read_lines(path):
    with open(path) as fh:
        return fh.read().splitlines()


def test_csv_header_and_row_layout(tmp_path):
    cfg = small_cfg(tmp_path)
    with pytest.warns(RuntimeWarning):
        run_experiment(cfg)
    lines = read_lines(cfg.output_path)
    assert lines[0] == CSV_HEADER
    # t = 0 plus 4 eval marks per seed; diag marks are a subset of eval marks
    assert len(lines) == 1 + 2 * 5
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "0"
    # t = 0 carries every field
    assert all(field != "" for field in first)
    # eval-only rows leave the diagnostic fields empty
    t1000 = lines[2].split(",")
    assert t1000[1] == "1000"
    assert t1000[2] != "" and t1000[3] == "" and t1000[6] == ""
    assert t1000[8] != ""  # lambda_t is always present
    # float fields round-trip exactly through repr
    assert repr(float(first[2])) == first[2]


def test_rows_ordered_by_seed_then_time(tmp_path):
    cfg = small_cfg(tmp_path, seeds=(5, 2, 9))
    with pytest.warns(RuntimeWarning):
        run_experiment(cfg)
    rows = [line.split(",") for line in read_lines(cfg.output_path)[1:]]
    seeds = [int(r[0]) for r in rows]
    # config order is preserved, times ascend within each seed
    assert seeds == [5] * 5 + [2] * 5 + [9] * 5
    for i in range(len(rows) - 1):
        if rows[i][0] == rows[i + 1][0]:
            assert int(rows[i][1]) < int(rows[i + 1][1])


def test_summary_mean_recomputable_from_csv(tmp_path):
    cfg = small_cfg(tmp_path, seeds=(0, 1, 2))
    with pytest.warns(RuntimeWarning):
        summary = run_experiment(cfg)
    finals = []
    for line in read_lines(cfg.output_path)[1:]:
        parts = line.split(",")
        if int(parts[1]) == cfg.total_steps and parts[2]:
            finals.append(float(parts[2]))
    assert len(finals) == 3
    assert summary.mean_final == pytest.approx(np.mean(finals), abs=1e-12)
    assert summary.stderr_final == pytest.approx(
        np.std(finals, ddof=1) / math.sqrt(3), abs=1e-12
    )
    assert summary.aborts == ()
    assert dict(summary.final_returns) == {
        0: finals[0], 1: finals[1], 2: finals[2]
    }


def test_total_steps_zero_single_row(tmp_path):
    cfg = small_cfg(tmp_path, total_steps=0, eval_every=1, diag_every=1, seeds=(0,))
    with pytest.warns(RuntimeWarning):
        summary = run_experiment(cfg)
    lines = read_lines(cfg.output_path)
    assert len(lines) == 2
    assert lines[1].split(",")[1] == "0"
    assert summary.mean_final is not None
    assert summary.stderr_final == 0.0


def test_rerun_bytes_identical_and_parallel(tmp_path):
    cfg_a = small_cfg(tmp_path, "a.csv", seeds=(0, 1, 2))
    cfg_b = small_cfg(tmp_path, "b.csv", seeds=(0, 1, 2))
    cfg_c = small_cfg(tmp_path, "c.csv", seeds=(0, 1, 2))
    with pytest.warns(RuntimeWarning):
        run_experiment(cfg_a, workers=1)
    with pytest.warns(RuntimeWarning):
        run_experiment(cfg_b, workers=1)
    with pytest.warns(RuntimeWarning):
        run_experiment(cfg_c, workers=2)
    a = open(cfg_a.output_path, "rb").read()
    assert a == open(cfg_b.output_path, "rb").read()
    assert a == open(cfg_c.output_path, "rb").read()


def test_alg2_rows_have_soft_diagnostics(tmp_path):
    cfg = small_cfg(tmp_path, algorithm="alg2", seeds=(0,))
    with pytest.warns(RuntimeWarning):
        run_experiment(cfg)
    last = read_lines(cfg.output_path)[-1].split(",")
    assert last[1] == "4000"
    # tracking + gradient diagnostics computed against the soft oracle
    assert last[4] != "" and last[5] != "" and last[6] != ""


def test_sweep_table_sorted_and_matches_single_runs(tmp_path):
    base = small_cfg(tmp_path, "s.csv", seeds=(0, 1))
    with pytest.warns(RuntimeWarning):
        result = sweep(base, [2.0, 0.5])
    assert [r.eps_lambda for r in result.rows] == [0.5, 2.0]
    assert result.spread == pytest.approx(
        abs(result.rows[0].mean_final - result.rows[1].mean_final), abs=1e-15
    )
    # each value's run equals a standalone run at that eps_lambda, byte for byte
    solo = dataclasses.replace(
        base,
        schedule=dataclasses.replace(base.schedule, eps_lambda=2.0),
        output_path=str(tmp_path / "solo.csv"),
    )
    with pytest.warns(RuntimeWarning):
        solo_summary = run_experiment(solo)
    swept_bytes = open(str(tmp_path / "s_eps2.csv"), "rb").read()
    solo_bytes = open(solo.output_path, "rb").read()
    assert swept_bytes == solo_bytes
    assert result.summaries[1].mean_final == solo_summary.mean_final


def test_sweep_rejects_empty_values(tmp_path):
    with pytest.raises(ValueError):
        sweep(small_cfg(tmp_path), [])


def test_stationarity_report_synthetic_slope(tmp_path):
    # grad_norm_reg = t^(-1/2) exactly: window averages decay like 1/t
    path = tmp_path / "synth.csv"
    lines = [CSV_HEADER]
    for t in range(100, 10_001, 100):
        g = t ** -0.5
        lines.append(f"0,{t},,,,,{g!r},,0.01")
    path.write_text("\n".join(lines) + "\n")
    report = stationarity_report(str(path))
    assert report.slope == pytest.approx(-1.0, abs=0.05)
    times = [t for t, _ in report.checkpoints]
    assert times == sorted(times)
    # each window mean is the mean of g^2 over [ceil(t/2), t]
    t_probe = 10_000
    expected = np.mean([1.0 / t for t in range(5_000, 10_001, 100)])
    found = dict(report.checkpoints)[t_probe]
    assert found == pytest.approx(expected, abs=1e-12)


def test_stationarity_report_requires_grad_rows(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(CSV_HEADER + "\n" + "0,0,0.5,,,,,,0.01\n")
    with pytest.raises(ValueError):
        stationarity_report(str(path))
    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n")
    with pytest.raises(ValueError):
        stationarity_report(str(bad))
    with pytest.raises(ValueError):
        stationarity_report(str(path), window="first_half")


def test_parse_config_round_trip_and_overrides():
    cfg = parse_config_text(
        """
        # chain study
        algorithm = alg2
        chain_n = 8
        gamma = 0.97
        total_steps = 1000
        eval_every = 100
        diag_every = 500
        eval_episodes = 4
        seeds = 0..2,7
        output_path = out.csv
        theta_init = 0.5
        q_init = -0.25
        diag_p0 = initial
        schedule.eps_lambda = 0.125
        schedule.lambda_coef = 0.05
        behavior.epsilon = 0.8
        behavior.temperature = 0.2
        """
    )
    assert cfg.algorithm == "alg2"
    assert cfg.chain_n == 8 and cfg.gamma == 0.97
    assert cfg.seeds == (0, 1, 2, 7)
    assert cfg.schedule.eps_lambda == 0.125
    assert cfg.schedule.lambda_coef == 0.05
    assert cfg.schedule.alpha_coef == 101.0  # untouched default
    assert cfg.behavior.epsilon == 0.8
    assert cfg.theta_init == 0.5 and cfg.q_init == -0.25
    assert cfg.diag_p0 == "initial"


def test_parse_config_errors():
    with pytest.raises(ValueError, match="algorithm"):
        parse_config_text("total_steps = 10\neval_every = 1\n")
    with pytest.raises(ValueError, match="unknown config key"):
        parse_config_text("algorithm = alg1\nbogus = 1\n")
    with pytest.raises(ValueError, match="unknown schedule key"):
        parse_config_text("algorithm = alg1\nschedule.zeta = 1\n")
    with pytest.raises(ValueError, match="key=value"):
        parse_config_text("algorithm alg1\n")
    with pytest.raises(ValueError):
        parse_config_text("algorithm = alg9\n")


def test_parse_seed_spec_forms():
    assert parse_seed_spec("0..3") == (0, 1, 2, 3)
    assert parse_seed_spec("4,7,9") == (4, 7, 9)
    assert parse_seed_spec("0..1,10..11,5") == (0, 1, 10, 11, 5)
    assert parse_seed_spec((3, 1)) == (3, 1)
    with pytest.raises(ValueError):
        parse_seed_spec("5..2")
    with pytest.raises(ValueError):
        parse_seed_spec("")


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(algorithm="alg3")
    with pytest.raises(ValueError):
        RunConfig(algorithm="alg1", total_steps=-1)
    with pytest.raises(ValueError):
        RunConfig(algorithm="alg1", seeds=())
    with pytest.raises(ValueError):
        RunConfig(algorithm="alg1", total_steps=100, eval_every=300)
    with pytest.raises(ValueError):
        RunConfig(algorithm="alg1", diag_p0="sideways")
