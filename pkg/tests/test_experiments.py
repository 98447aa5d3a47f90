"""Experiment campaigns at reduced scale, persistence, and verification."""

import numpy as np
import pytest

from flowlab.experiments import (
    ExperimentConfig,
    default_config,
    evaluate_checks,
    run_experiment,
    summarize,
)
from flowlab.reporting import load_result, save_result, verify_result


def small(kind, **overrides):
    base = {
        "flow": dict(ladder=(2**7, 2**8), seeds=(0, 1, 2), fine_n=2**10),
        "inverse": dict(ladder=(2**7, 2**8), seeds=(0, 1, 2), fine_n=2**10, probe_seeds=40, probe_n=2**7),
        "rate": dict(ladder=(2**4, 2**5, 2**6), seeds=tuple(range(8)), fine_n=2**11),
        "init-continuity": dict(seeds=(0, 1), pair_count=60, solver_n=2**8, fine_n=2**10),
        "driver-continuity": dict(ladder=(2**4, 2**5, 2**6), seeds=(0, 1, 2, 3), fine_n=2**11, lambda_weight=5.0),
        "moments": dict(sample_counts=(400, 800), solver_n=2**7),
    }[kind]
    base.update(overrides)
    return default_config(kind, **base)


class TestConfig:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ExperimentConfig(kind="magic")

    def test_rejects_empty_seeds(self):
        with pytest.raises(ValueError):
            default_config("flow", seeds=())

    def test_rejects_unsorted_ladder(self):
        with pytest.raises(ValueError):
            default_config("flow", ladder=(256, 128))

    def test_solver_gate_applies(self):
        with pytest.raises(ValueError, match="admissible window"):
            default_config("flow", hurst=0.55, alpha=0.3)  # alpha below 1 - H

    def test_roundtrip_dict(self):
        cfg = small("rate")
        doc = cfg.to_dict()
        back = ExperimentConfig.from_dict(doc)
        assert back == cfg

    def test_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="unknown config fields"):
            ExperimentConfig.from_dict({"kind": "rate", "mystery": 1})


def test_named_runners_enforce_kind():
    from flowlab.experiments import run_flow_experiment, run_rate_experiment

    cfg = small("rate")
    res = run_rate_experiment(cfg)
    assert res.summary["ladder"] == [16, 32, 64]
    with pytest.raises(ValueError, match="kind"):
        run_flow_experiment(cfg)


class TestFlowExperiment:
    def test_geometric_passes_and_counts(self):
        cfg = small("flow")
        res = run_experiment(cfg)
        assert res.passed, res.checks
        assert len(res.records) == 3 * 2 * 35  # seeds x ladder x triples (one initial point)
        assert all(r["status"] == "ok" for r in res.records)

    def test_additive_exact(self):
        res = run_experiment(small("flow", coefficients="builtin:additive:0.8"))
        assert res.summary["exact_field"]
        assert res.summary["max_discrepancy"] <= 1e-12
        assert res.passed

    def test_degenerate_triples_have_zero_discrepancy(self):
        res = run_experiment(small("flow"))
        for rec in res.records:
            if rec["r"] == rec["tau"] == rec["t"] == 0.0:
                assert rec["disc_forward"] == 0.0

    def test_solver_failures_become_error_records(self):
        # sigma0 = 60 drives exp(60 B) across the blow-up guard on some seeds
        cfg = small("flow", coefficients="builtin:geometric:60.0", seeds=tuple(range(6)))
        res = run_experiment(cfg)
        errors = [r for r in res.records if str(r["status"]).startswith("error")]
        assert errors, "expected at least one blow-up on these seeds"
        assert "guard" in errors[0]["status"]
        assert len(res.records) == 6 * 2 * 35  # no silent skips
        assert not res.checks["no_error_records"]
        assert not res.passed


class TestInverseExperiment:
    def test_geometric_passes(self):
        res = run_experiment(small("inverse"))
        assert res.passed, res.checks
        assert res.summary["probe_inversions"] == 0

    def test_record_count(self):
        res = run_experiment(small("inverse"))
        core = [r for r in res.records if r["status"] != "probe"]
        assert len(core) == 3 * 2 * 15  # seeds x ladder x ordered pairs


class TestRateExperiment:
    def test_medians_decrease(self):
        res = run_experiment(small("rate"))
        med = res.summary["median_error"]
        assert all(a > b for a, b in zip(med, med[1:]))
        assert res.checks["median_error_decreasing"]
        assert res.checks["lambda_diff_decreasing"]
        assert res.checks["lambda_coarse_bounded"]

    def test_record_count_no_skips(self):
        cfg = small("rate")
        res = run_experiment(cfg)
        assert len(res.records) == len(cfg.seeds) * len(cfg.ladder)


class TestContinuityExperiments:
    def test_init_additive_ratio_exactly_one(self):
        res = run_experiment(small("init-continuity", coefficients="builtin:additive:0.8"))
        assert res.summary["max_deviation_from_one"] <= 1e-12
        assert res.passed

    def test_init_geometric_bounded(self):
        res = run_experiment(small("init-continuity"))
        assert res.summary["ratio_spread"] <= 10.0
        assert res.passed

    def test_driver_continuity_decays(self):
        res = run_experiment(small("driver-continuity"))
        assert res.passed, (res.checks, res.summary)
        gaps = res.summary["median_sol_gap"]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_driver_continuity_additive_linear_relation(self):
        from flowlab import fbm
        from flowlab.paths import w_alpha_lambda_norm

        cfg = small("driver-continuity", coefficients="builtin:additive:0.8")
        res = run_experiment(cfg)
        # translation flows: solution gap == |sigma| * weighted norm of the driver gap
        rec = next(r for r in res.records if r["seed"] == 0 and r["coarse_n"] == 2**4)
        g = fbm.sample_circulant(fbm.FbmSpec(cfg.hurst, 1, cfg.horizon, cfg.fine_n, 0)).path
        gap = g - fbm.polygonal(g, 2**4)
        expected = 0.8 * w_alpha_lambda_norm(gap, cfg.alpha, rec["lambda_weight"])
        assert rec["sol_gap"] == pytest.approx(expected, rel=1e-10)


class TestMomentsExperiment:
    def test_stability_checks(self):
        res = run_experiment(small("moments"))
        assert res.passed, res.checks
        assert res.summary["paths"] == 800

    def test_zero_sigma_moments_exact(self):
        res = run_experiment(small("moments", coefficients="builtin:zero", moment_x0=0.5))
        for entry in res.summary["estimates"].values():
            assert entry["p2"]["value"] == pytest.approx(0.25, abs=1e-15)
            assert entry["p2"]["stderr"] == pytest.approx(0.0, abs=1e-15)

    def test_additive_p2_against_common_seed_reference(self):
        from flowlab import fbm

        cfg = small("moments", coefficients="builtin:additive:0.8", moment_x0=0.5)
        res = run_experiment(cfg)
        # reference simulation with the same seed: sup |x0 + 0.8 B_t| per path
        drivers = fbm.sample_paths(
            fbm.FbmSpec(cfg.hurst, 1, cfg.horizon, cfg.solver_n, cfg.seeds[0]),
            max(cfg.sample_counts), method="circulant",
        )
        sup_ref = np.abs(0.5 + 0.8 * drivers[:, :, 0]).max(axis=1)
        expected = float((sup_ref[: cfg.sample_counts[-1]] ** 2).mean())
        got = res.summary["estimates"][str(cfg.sample_counts[-1])]["p2"]["value"]
        assert got == pytest.approx(expected, rel=1e-12)

    def test_tolerance_overrides_respected(self):
        cfg = small("moments", tolerances={"stderr_multiple": 1e-9})
        res = run_experiment(cfg)
        assert not res.passed  # an absurdly tight override must flip the checks


class TestPersistence:
    def test_roundtrip_and_verify(self, tmp_path):
        res = run_experiment(small("flow"))
        out = save_result(res, tmp_path / "flow")
        assert (out / "records.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "config.json").exists()
        assert (out / "series_median_discrepancy.csv").exists()
        report = verify_result(out)
        assert report.ok, report.mismatches

    def test_bit_identical_reruns(self, tmp_path):
        cfg = small("inverse")
        a = save_result(run_experiment(cfg), tmp_path / "a")
        b = save_result(run_experiment(cfg), tmp_path / "b")
        assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()

    def test_verify_catches_tampering(self, tmp_path):
        res = run_experiment(small("rate"))
        out = save_result(res, tmp_path / "rate")
        summary_file = out / "summary.json"
        text = summary_file.read_text().replace('"fitted_slope": -0.', '"fitted_slope": -9.')
        summary_file.write_text(text)
        report = verify_result(out)
        assert not report.ok
        assert any("fitted_slope" in m for m in report.mismatches)

    def test_summary_recomputable_from_loaded_records(self, tmp_path):
        res = run_experiment(small("driver-continuity"))
        out = save_result(res, tmp_path / "drv")
        cfg, records, stored = load_result(out)
        fresh = summarize(cfg, records)
        assert fresh["median_sol_gap"] == pytest.approx(res.summary["median_sol_gap"], rel=1e-12)
        checks = evaluate_checks(cfg, fresh)
        assert checks == res.checks

    def test_rate_series_files(self, tmp_path):
        res = run_experiment(small("rate"))
        out = save_result(res, tmp_path / "r")
        series = (out / "series_holder_error.csv").read_text().splitlines()
        assert series[0] == "x,y,q25,q75"
        assert len(series) == 1 + len(res.summary["ladder"])
