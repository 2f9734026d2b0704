import math

import mpmath as mp
import numpy as np
import pytest

from qme_sim import cycle
from qme_sim.cycle import CycleConfig, run_cycle, sweep
from qme_sim.errors import DegenerateCycle, OutsideEngineRegime, QmeError
from qme_sim.pulsesim import NoiseModel

mp.mp.dps = 40
HNU = mp.mpf("4.135667696")
GRID = cycle.p_range(0.55, 1.0, 0.05)
PRESETS = (1.88, 2.98)


def tanh_half(kbt):
    return mp.tanh(HNU / (2 * mp.mpf(kbt)))


def oracle_heat(p, kbt):
    return float(HNU * mp.mpf(p) * tanh_half(kbt))


def oracle_work(p, kbt):
    return float(HNU * (2 * mp.mpf(p) - 1) * tanh_half(kbt))


def test_p_range_inclusive():
    assert GRID == [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0]
    with pytest.raises(QmeError):
        cycle.p_range(0, 1, 0)


@pytest.mark.parametrize("kbt", PRESETS)
def test_ledger_matches_closed_forms(kbt):
    for p in GRID:
        r = run_cycle(CycleConfig(p=p, kBT=kbt))
        assert r.heat_p == pytest.approx(oracle_heat(p, kbt), abs=1e-12)
        assert r.work_ext == pytest.approx(oracle_work(p, kbt), abs=1e-12)
        assert r.heat_p == pytest.approx(cycle.heat_absorbed(p, 1.0, kbt), abs=1e-12)
        assert r.work_ext == pytest.approx(cycle.work_extracted(p, 1.0, kbt), abs=1e-12)
        assert r.efficiency == pytest.approx(2 - 1 / p, abs=1e-12)
        assert r.heat_cold == pytest.approx(r.work_ext - r.heat_p, abs=1e-12)
        assert abs(r.dS_b) <= 1e-10
        assert r.flags == ()


def test_reference_cycle():
    r = run_cycle(CycleConfig(p=0.75, kBT=2.98))
    assert r.heat_p == pytest.approx(1.862552, abs=1e-6)
    assert r.work_ext == pytest.approx(1.241701, abs=1e-6)
    assert r.heat_cold == pytest.approx(-0.620851, abs=1e-6)
    assert r.efficiency == pytest.approx(2 / 3, abs=1e-12)
    top = run_cycle(CycleConfig(p=1.0, kBT=2.98))
    assert top.heat_p == pytest.approx(2.483403, abs=1e-6)
    assert top.work_ext == pytest.approx(top.heat_p, abs=1e-12)
    assert top.power_ext == pytest.approx(oracle_work(1.0, 2.98) / 7.7e-3, rel=1e-12)
    assert top.power_ext == pytest.approx(322.5198, abs=1e-4)


def test_other_reference_values():
    assert cycle.heat_absorbed(0.75, 1.0, 1.88) == pytest.approx(2.482850, abs=1e-6)
    assert cycle.work_extracted(0.6, 1.0, 1.88) == pytest.approx(0.662093, abs=1e-6)
    assert cycle.heat_absorbed(1.0, 1.0, 1e-3) == pytest.approx(4.135667696, abs=1e-12)
    assert cycle.heat_absorbed(0.0, 1.0, 2.98) == 0.0
    assert cycle.extracted_power(0.0, 7.7e-3) == 0.0


def test_efficiency_law():
    assert cycle.efficiency(1.0) == 1.0
    assert cycle.efficiency(0.8) == pytest.approx(0.75, abs=1e-15)
    assert cycle.efficiency(0.5) == 0.0
    with pytest.raises(OutsideEngineRegime):
        cycle.efficiency(0.3)


def test_threshold_point():
    r = run_cycle(CycleConfig(p=0.5, kBT=2.98))
    assert r.work_ext == pytest.approx(0.0, abs=1e-15)
    assert r.efficiency == pytest.approx(0.0, abs=1e-15)
    assert cycle.NON_ENGINE in r.flags


def test_diagnostic_below_threshold():
    r = run_cycle(CycleConfig(p=0.3, kBT=2.98))
    assert r.q_used == 0.0
    assert set(r.flags) == {cycle.NON_ENGINE, cycle.Q_CLIPPED}
    assert r.work_ext == pytest.approx(0.0, abs=1e-15)
    assert r.ok


def test_entropy_source_shape():
    ps = np.linspace(0.5, 1.0, 52)[1:-1]
    for kbt in PRESETS:
        ds = [run_cycle(CycleConfig(p=p, kBT=kbt)).dS_a for p in ps]
        assert all(d > 0 for d in ds)
        assert all(b < a for a, b in zip(ds, ds[1:]))
        assert abs(run_cycle(CycleConfig(p=1.0, kBT=kbt)).dS_a) <= 1e-12


def test_power_increasing():
    pw = [run_cycle(CycleConfig(p=p, kBT=1.88)).power_ext for p in GRID]
    assert all(b > a for a, b in zip(pw, pw[1:]))


def test_infinite_temperature_is_degenerate():
    with pytest.raises(DegenerateCycle):
        run_cycle(CycleConfig(p=0.8, kBT=math.inf))


def test_sweep_order_and_failed_rows():
    rows = sweep([0.6, 0.8], [2.98, 1.88])
    assert [(r.kBT, r.p) for r in rows] == [(2.98, 0.6), (2.98, 0.8), (1.88, 0.6), (1.88, 0.8)]
    bad = sweep([0.8, 1.5], [2.98])
    assert bad[0].ok
    assert not bad[1].ok and bad[1].flags == ("error:InvalidStrength",)
    assert math.isnan(bad[1].heat_p)


def test_single_point_sweep_equals_run_cycle():
    (row,) = sweep([0.75], [2.98])
    ref = run_cycle(CycleConfig(p=0.75, kBT=2.98))
    assert row.heat_p == ref.heat_p and row.work_ext == ref.work_ext


def test_parallel_sweep_identical():
    serial = sweep(GRID, PRESETS, backend="pulse", noise=NoiseModel())
    parallel = sweep(GRID, PRESETS, backend="pulse", noise=NoiseModel(), n_jobs=2)
    assert [(r.p, r.kBT, r.work_ext, r.heat_p) for r in serial] == [(r.p, r.kBT, r.work_ext, r.heat_p) for r in parallel]


def test_ideal_efficiency_temperature_independent():
    rows = sweep(cycle.p_range(0.55, 0.95, 0.05), PRESETS)
    eta = np.array([r.efficiency for r in rows]).reshape(2, -1)
    np.testing.assert_allclose(eta[0], eta[1], atol=1e-12)


def test_pulse_backend_noiseless_matches_ideal():
    for p in (0.6, 0.75, 1.0):
        a = run_cycle(CycleConfig(p=p, kBT=2.98))
        b = run_cycle(CycleConfig(p=p, kBT=2.98, backend="pulse"))
        assert b.heat_p == pytest.approx(a.heat_p, abs=1e-12)
        assert b.work_ext == pytest.approx(a.work_ext, abs=1e-12)


def test_noisy_pulse_curves():
    rows = sweep(GRID, PRESETS, backend="pulse", noise=NoiseModel())
    eta = np.array([r.efficiency for r in rows]).reshape(2, -1)
    assert abs(eta[0, -1] - 1) < 0.05 and abs(eta[1, -1] - 1) < 0.05
    assert np.abs(eta[0] - eta[1]).max() > 1e-6


def test_config_validation():
    with pytest.raises(QmeError):
        CycleConfig(p=1.2, kBT=2.98)
    with pytest.raises(QmeError):
        CycleConfig(p=0.7, kBT=2.98, tau_cycle=0)
    with pytest.raises(QmeError):
        CycleConfig(p=0.7, kBT=2.98, backend="analog")
    assert CycleConfig(p=0.7, kBT=2.98, backend="pulse").backend == cycle.PULSE
