import numpy as np
import pytest

from spinrelay.core import ChainConfig
from spinrelay.experiments import (
    STATUS_NO_PEAK,
    STATUS_OK,
    SweepRecord,
    default_dt,
    default_t_max,
    run_point,
    sweep_length,
    sweep_tau,
    trace_experiment,
)
from spinrelay.protocol import MeasurementSchedule


class TestSweepRecord:
    def test_ok_requires_values(self):
        with pytest.raises(ValueError, match="fidelity fields"):
            SweepRecord(
                swept_name="tau",
                swept_value=1.0,
                n=6,
                j_boundary=0.05,
                gamma=0.0,
                tau=1.0,
                f_exc_m=None,
                f_coh_m=None,
                f_av_m=None,
                t_m=None,
                p_suc=None,
                n_measurements=None,
                status=STATUS_OK,
            )

    def test_failed_status_must_not_fabricate(self):
        with pytest.raises(ValueError, match="must not carry"):
            SweepRecord(
                swept_name="tau",
                swept_value=1.0,
                n=6,
                j_boundary=0.05,
                gamma=0.0,
                tau=1.0,
                f_exc_m=0.9,
                f_coh_m=0.9,
                f_av_m=0.9,
                t_m=1.0,
                p_suc=0.5,
                n_measurements=1,
                status=STATUS_NO_PEAK,
            )

    def test_unknown_status_rejected(self):
        with pytest.raises(ValueError, match="status"):
            SweepRecord(
                swept_name="tau",
                swept_value=1.0,
                n=6,
                j_boundary=0.05,
                gamma=0.0,
                tau=1.0,
                f_exc_m=None,
                f_coh_m=None,
                f_av_m=None,
                t_m=None,
                p_suc=None,
                n_measurements=None,
                status="maybe",
            )


class TestDefaults:
    def test_horizon_and_spacing(self):
        cfg = ChainConfig(n_total=12)
        assert default_t_max(cfg) == pytest.approx(2.5 * 200 * np.pi)
        assert default_dt(cfg) == pytest.approx(200 * np.pi / 400)


class TestRunPoint:
    def test_zeno_point_reports_no_peak(self):
        rec = run_point(ChainConfig(n_total=12), 3.0)
        assert rec.status == STATUS_NO_PEAK
        assert rec.f_av_m is None and rec.t_m is None and rec.p_suc is None

    def test_no_measurement_point(self):
        rec = run_point(ChainConfig(n_total=12), 0.0)
        assert rec.status == STATUS_OK
        assert rec.tau == 0.0
        assert rec.p_suc == 1.0
        assert rec.n_measurements == 0


class TestSweeps:
    def test_canonical_order_and_determinism(self, monkeypatch):
        cfg = ChainConfig(n_total=12, gamma=0.02)
        taus = [60.0, 150.0, 100.0]
        first = sweep_tau(cfg, taus)
        assert [r.swept_value for r in first] == sorted(taus)
        monkeypatch.setenv("SPINRELAY_THREADS", "3")
        second = sweep_tau(cfg, list(reversed(taus)))
        assert first == second  # bit-identical regardless of worker count

    def test_length_sweep_sets_sites_per_chain(self):
        recs = sweep_length([6, 8], gamma=0.02, tau_fixed=150.0)
        assert [r.n for r in recs] == [6, 8]
        assert all(r.status == STATUS_OK for r in recs)
        assert recs[0].f_av_m >= recs[1].f_av_m


class TestTraceExperiment:
    def test_point_count_guard(self):
        cfg = ChainConfig(n_total=6)
        with pytest.raises(ValueError, match="n_points"):
            trace_experiment(cfg, None, 100.0, 50)

    def test_grid_augmented_with_measurement_times(self):
        cfg = ChainConfig(n_total=12, gamma=0.02)
        schedule = MeasurementSchedule(tau=33.3, t_max=200.0)
        tr = trace_experiment(cfg, schedule, 200.0, 150)
        for tm in schedule.measurement_times():
            assert np.isclose(tr.times, tm, rtol=0, atol=1e-9).any()
        assert len(tr.jumps) == schedule.measurement_times().size
        assert np.all(np.diff(tr.times) > 0)
