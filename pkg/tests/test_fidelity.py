import math

import numpy as np
import pytest

from spinrelay.analytics import effective_average_fidelity, effective_model
from spinrelay.core import ChainConfig
from spinrelay.fidelity import (
    FidelityTrace,
    NoPeakError,
    find_first_peak,
    haar_average_mc,
    transfer_fidelities,
)
from spinrelay.protocol import MeasurementSchedule


def analytic_trace(j_eff, t_max, n):
    t = np.linspace(0.0, t_max, n)
    f_av = effective_average_fidelity(j_eff, t)
    f_coh = np.abs(np.sin(j_eff * t))
    f_exc = np.sin(j_eff * t) ** 2
    return FidelityTrace(times=t, f_exc=f_exc, f_coh=f_coh, f_av=f_av)


class TestFidelityTrace:
    def test_asserts_average_relation_on_construction(self):
        t = np.array([0.0, 1.0, 2.0])
        with pytest.raises(ValueError, match="f_av"):
            FidelityTrace(times=t, f_exc=t * 0, f_coh=t * 0, f_av=np.array([0.5, 0.6, 0.5]))

    def test_requires_increasing_times(self):
        t = np.array([0.0, 2.0, 1.0])
        with pytest.raises(ValueError, match="increasing"):
            FidelityTrace(times=t, f_exc=t * 0, f_coh=t * 0, f_av=t * 0 + 0.5)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            FidelityTrace(
                times=np.array([0.0, 1.0]),
                f_exc=np.zeros(3),
                f_coh=np.zeros(2),
                f_av=np.full(2, 0.5),
            )


class TestTransferFidelities:
    def test_values_at_time_zero(self):
        cfg = ChainConfig(n_total=6)
        tr = transfer_fidelities(cfg, np.array([0.0, 1.0]))
        assert tr.f_exc[0] == 0.0
        assert tr.f_coh[0] == 0.0
        assert tr.f_av[0] == pytest.approx(0.5, abs=1e-15)

    def test_grid_validation(self):
        cfg = ChainConfig(n_total=4)
        with pytest.raises(ValueError, match="start at 0"):
            transfer_fidelities(cfg, np.array([1.0, 2.0]))
        with pytest.raises(ValueError, match="increasing"):
            transfer_fidelities(cfg, np.array([0.0, 2.0, 2.0]))

    def test_bounds_hold_everywhere(self):
        cfg = ChainConfig(n_total=6, gamma=0.03)
        tr = transfer_fidelities(cfg, np.linspace(0.0, 800.0, 700))
        assert np.all(tr.f_av >= 0.5 - 1e-12) and np.all(tr.f_av <= 1.0 + 1e-12)
        assert np.all(tr.f_exc >= -1e-12) and np.all(tr.f_exc <= 1.0 + 1e-12)
        assert np.all(tr.f_coh >= -1e-12) and np.all(tr.f_coh <= 1.0 + 1e-12)

    def test_tracks_effective_model_without_dephasing(self):
        # The weak-coupling two-qubit model carries O((J'N/pi J)^2) ~ 4e-2
        # corrections (virtual-excitation ripple); 0.02 bounds the average,
        # 0.06 the individual branches, both with margin over the measured
        # worst case for N=12, J'=0.05.
        cfg = ChainConfig(n_total=12)
        em = effective_model(cfg)
        t = np.linspace(0.0, 2.0 * em.t_m_eff, 1200)
        tr = transfer_fidelities(cfg, t)
        assert np.abs(tr.f_av - effective_average_fidelity(em.j_eff, t)).max() < 0.02
        assert np.abs(tr.f_coh - np.abs(np.sin(em.j_eff * t))).max() < 0.06
        assert np.abs(tr.f_exc - np.sin(em.j_eff * t) ** 2).max() < 0.06

    def test_peak_degrades_monotonically_with_dephasing(self):
        peaks = []
        for gamma in (0.0, 0.02, 0.05):
            cfg = ChainConfig(n_total=12, gamma=gamma)
            t = np.linspace(0.0, 2.5 * effective_model(cfg).t_m_eff, 1001)
            peaks.append(find_first_peak(transfer_fidelities(cfg, t)).f_m)
        assert peaks[0] > peaks[1] > peaks[2]

    def test_conditioned_trace_jumps(self):
        cfg = ChainConfig(n_total=12, gamma=0.05)
        schedule = MeasurementSchedule(tau=40.0, t_max=200.0)
        grid = np.linspace(0.0, 200.0, 401)  # includes k*40 exactly
        tr = transfer_fidelities(cfg, grid, protocol=schedule)
        assert len(tr.jumps) == 5
        for jump in tr.jumps:
            assert 0.0 <= jump.probability <= 1.0
            i = int(np.searchsorted(tr.times, jump.time))
            assert tr.times[i] == pytest.approx(jump.time, abs=1e-12)
            # renormalisation can only raise the conditioned values
            assert tr.f_exc[i] >= jump.f_exc_pre - 1e-12
            assert tr.f_coh[i] >= jump.f_coh_pre - 1e-12

    def test_missing_measurement_time_rejected(self):
        cfg = ChainConfig(n_total=6)
        schedule = MeasurementSchedule(tau=7.0, t_max=20.0)
        with pytest.raises(ValueError, match="missing measurement time"):
            transfer_fidelities(cfg, np.linspace(0.0, 20.0, 11), protocol=schedule)


class TestFindFirstPeak:
    def test_analytic_trace_peaks_at_effective_time(self):
        em = effective_model(ChainConfig(n_total=12))
        tr = analytic_trace(em.j_eff, 2.5 * em.t_m_eff, 1001)
        spacing = tr.times[1] - tr.times[0]
        peak = find_first_peak(tr)
        assert abs(peak.t_m - em.t_m_eff) < spacing
        assert peak.f_m == tr.f_av[peak.index]

    def test_monotone_trace_has_no_peak(self):
        em = effective_model(ChainConfig(n_total=12))
        tr = analytic_trace(em.j_eff, 0.4 * em.t_m_eff, 301)  # still rising
        with pytest.raises(NoPeakError):
            find_first_peak(tr)

    def test_too_short_trace(self):
        tr = FidelityTrace(
            times=np.array([0.0, 1.0]),
            f_exc=np.zeros(2),
            f_coh=np.zeros(2),
            f_av=np.full(2, 0.5),
        )
        with pytest.raises(NoPeakError):
            find_first_peak(tr)

    def test_shallow_ripple_is_not_a_peak(self):
        # rising envelope with a small superposed ripple: crests must be
        # skipped until the envelope itself turns over
        t = np.linspace(0.0, 1000.0, 2001)
        envelope = 0.5 + 0.4 * np.sin(0.5 * math.pi * t / 1000.0)
        f_av = envelope + 0.004 * np.sin(2 * math.pi * t / 22.0)
        f_exc = np.zeros_like(t)
        f_coh = 3.0 * (f_av - 0.5)
        tr = FidelityTrace(times=t, f_exc=f_exc, f_coh=f_coh, f_av=f_av)
        with pytest.raises(NoPeakError):
            find_first_peak(tr)  # envelope never declines by the margin


class TestHaarAverage:
    def test_time_zero_matches_half(self):
        cfg = ChainConfig(n_total=6)
        est = haar_average_mc(cfg, 0.0, n_samples=4000, seed=3)
        assert abs(est.mean - 0.5) <= 3 * est.stderr
        assert est.stderr < 0.01

    def test_matches_closed_form_unitary(self):
        cfg = ChainConfig(n_total=4)
        tr = transfer_fidelities(cfg, np.array([0.0, 1.0]))
        est = haar_average_mc(cfg, 1.0, n_samples=4000, seed=11)
        assert abs(est.mean - tr.f_av[-1]) <= 3 * est.stderr

    def test_matches_closed_form_with_dephasing(self):
        cfg = ChainConfig(n_total=6, gamma=0.05)
        tr = transfer_fidelities(cfg, np.array([0.0, 200.0]))
        est = haar_average_mc(cfg, 200.0, n_samples=6000, seed=12)
        assert abs(est.mean - tr.f_av[-1]) <= 3 * est.stderr

    def test_sample_count_guard(self):
        with pytest.raises(ValueError, match="n_samples"):
            haar_average_mc(ChainConfig(n_total=4), 1.0, n_samples=50, seed=1)

    def test_deterministic_for_fixed_seed(self):
        cfg = ChainConfig(n_total=4, gamma=0.01)
        a = haar_average_mc(cfg, 2.0, n_samples=500, seed=9)
        b = haar_average_mc(cfg, 2.0, n_samples=500, seed=9)
        assert a == b
