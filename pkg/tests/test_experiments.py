import math

import numpy as np
import pytest

from photonsim import oracles
from photonsim.experiments import (
    PATH,
    MZConfig,
    RTOConfig,
    SlitGeometry,
    WavePacketEnvelope,
    build_measurement_state,
    double_slit_intensity,
    edc_sweep,
    fringe_visibility,
    run_delayed_choice,
    run_encounter_delayed_choice,
    run_mach_zehnder,
    run_rto,
    run_single_photon_collapse,
    sample_impacts,
    subsystem_interference_probe,
)
from photonsim.optics import PhaseSetting
from photonsim.qcore import PureState, QuantumError, apply_unitary, born_probabilities, partial_trace, purity

S = 1 / math.sqrt(2)
deg = PhaseSetting.degrees


def four_sigma(n, p=0.5):
    return 4 * math.sqrt(p * (1 - p) / n)


# --- Mach-Zehnder ---------------------------------------------------------------

@pytest.mark.parametrize("dphi,p_d1", [(0, 1.0), (90, 0.5), (180, 0.0)])
def test_mz_table_rows(dphi, p_d1):
    r = run_mach_zehnder(MZConfig(deg(dphi), deg(0)))
    assert r.analytic["D1"] == pytest.approx(p_d1, abs=1e-12)
    assert r.analytic["D1"] + r.analytic["D2"] == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("dphi", [0, 33, 90, 180, 271])
def test_mz_without_bs2_is_half_half(dphi):
    r = run_mach_zehnder(MZConfig(deg(dphi), deg(0), bs2_present=False))
    assert r.analytic["D1"] == pytest.approx(0.5, abs=1e-12)
    assert r.analytic["D2"] == pytest.approx(0.5, abs=1e-12)


def test_mz_sampling_is_deterministic():
    a = run_mach_zehnder(MZConfig(deg(60)), trials=500, seed=9)
    b = run_mach_zehnder(MZConfig(deg(60)), trials=500, seed=9)
    assert np.array_equal(a.trials.outcomes, b.trials.outcomes)
    assert a.n_trials == 500 and a.seed == 9


# --- delayed choice -------------------------------------------------------------

def test_delayed_choice_partitions():
    r = run_delayed_choice(0.0, 20_000, seed=3)
    inserted = r.trials.settings.astype(bool)
    with_bs2 = r.trials.subset(inserted)
    without = r.trials.subset(~inserted)
    assert with_bs2.counts()["D1"] == len(with_bs2)
    n = len(without)
    assert abs(without.counts()["D1"] / n - 0.5) < four_sigma(n)
    assert abs(inserted.mean() - 0.5) < four_sigma(len(inserted))


def test_delayed_choice_single_trial():
    r = run_delayed_choice(0.0, 1, seed=0)
    recs = list(r.trials)
    assert len(recs) == 1 and len(recs[0].outcomes) == 1 and recs[0].outcomes[0] in ("D1", "D2")


def test_delayed_choice_needs_a_trial():
    with pytest.raises(QuantumError):
        run_delayed_choice(0.0, 0)


# --- encounter delayed choice --------------------------------------------------

def test_edc_endpoints():
    for d in range(0, 360, 45):
        r0 = run_encounter_delayed_choice(deg(d), WavePacketEnvelope(2.0, 0.0))
        r1 = run_encounter_delayed_choice(deg(d), WavePacketEnvelope(2.0, 2.0))
        assert r0.analytic["D1"] == pytest.approx(math.cos(math.radians(d) / 2) ** 2, abs=1e-12)
        assert r1.analytic["D1"] == pytest.approx(0.5, abs=1e-12)


def test_edc_midpoint_zero_phase():
    # orthogonal segments: 0.5 * 0.5 + 0.5 * 1
    r = run_encounter_delayed_choice(0.0, WavePacketEnvelope(1.0, 0.5))
    assert r.analytic["D1"] == pytest.approx(0.75, abs=1e-12)


def test_edc_reports_four_subwaves():
    r = run_encounter_delayed_choice(deg(30), WavePacketEnvelope(4.0, 1.0))
    w = r.derived["subwave_weights"]
    assert len(w) == 4
    assert w["front/path1"] == pytest.approx(0.125) and w["back/path2"] == pytest.approx(0.375)
    assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)


def test_edc_sweep_default_sixteen():
    results = edc_sweep(0.0)
    assert len(results) == 16
    fractions = [r.metadata["config"]["delay_fraction"] for r in results]
    assert fractions[0] == 0 and fractions[-1] == 1
    p = [r.analytic["D1"] for r in results]
    assert np.allclose(np.diff(p), -0.5 / 15, atol=1e-12)


@pytest.mark.parametrize("T,t", [(0, 0), (1, -0.1), (1, 1.5), (math.nan, 0)])
def test_envelope_validation(T, t):
    with pytest.raises(QuantumError):
        WavePacketEnvelope(T, t)


# --- entangled pair -------------------------------------------------------------

@pytest.mark.parametrize("dphi,p_same", [(0, 1.0), (90, 0.5), (180, 0.0)])
def test_rto_correlation_rows(dphi, p_same):
    r = run_rto(RTOConfig(deg(0), deg(dphi)))
    assert r.derived["p_same"] == pytest.approx(p_same, abs=1e-12)
    assert r.derived["marginal_A"]["A1"] == pytest.approx(0.5, abs=1e-12)
    assert r.derived["marginal_B"]["B1"] == pytest.approx(0.5, abs=1e-12)


def test_rto_45_degrees_matches_oracle():
    expected = oracles.rto_oracle(0.0, math.pi / 4)["same"]
    assert expected == pytest.approx(0.8535533905932737, abs=1e-15)  # frozen from the 4x4 oracle
    assert run_rto(RTOConfig(0.0, deg(45))).derived["p_same"] == pytest.approx(expected, abs=1e-12)


def test_rto_depends_on_phase_difference_only():
    rng = np.random.default_rng(11)
    for a, b in rng.uniform(0, 2 * math.pi, size=(20, 2)):
        here = run_rto(RTOConfig(a, b)).derived["p_same"]
        shifted = run_rto(RTOConfig(0.0, b - a)).derived["p_same"]
        assert abs(here - shifted) < 1e-12


def test_rto_table_sums_to_one():
    r = run_rto(RTOConfig(deg(17), deg(250)))
    assert sum(r.analytic.values()) == pytest.approx(1.0, abs=1e-12)


def test_rto_trials_have_one_outcome_per_side():
    r = run_rto(RTOConfig(0.0, 0.0), trials=1000, seed=1)
    assert r.trials.outcomes.shape == (1000, 2)
    recs = list(r.trials)
    assert all(rec.outcomes[0] in ("A1", "A2") and rec.outcomes[1] in ("B1", "B2") for rec in recs)
    # perfect correlation at zero phase
    assert all(rec.outcomes[0][1] == rec.outcomes[1][1] for rec in recs)


# --- measurement state ----------------------------------------------------------

def test_measurement_state_reduced_operators():
    m = build_measurement_state()
    for keep in ("photon", "detector"):
        rho = partial_trace(m, [keep])
        assert np.allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)
        assert purity(rho) == pytest.approx(0.5, abs=1e-10)


def test_measurement_state_joint_probabilities():
    p = born_probabilities(build_measurement_state())
    assert p[("1", "D1")] == pytest.approx(0.5, abs=1e-15)
    assert p[("2", "D2")] == pytest.approx(0.5, abs=1e-15)
    assert p[("1", "D2")] == 0 and p[("2", "D1")] == 0


@pytest.mark.parametrize("phi", np.linspace(0, 2 * math.pi, 7))
def test_local_phase_leaves_reduced_states_alone(phi):
    m = build_measurement_state()
    before = [partial_trace(m, [k]).matrix for k in (0, 1)]
    for target in (0, 1):
        shifted = apply_unitary(m, np.diag([1, np.exp(1j * phi)]), [target])
        for k in (0, 1):
            assert np.max(np.abs(partial_trace(shifted, [k]).matrix - before[k])) < 1e-12


@pytest.mark.parametrize("phi", [0, 1, 2.5, math.pi])
def test_probe_on_measurement_state(phi):
    m = build_measurement_state()
    for sub in ("photon", "detector"):
        p = subsystem_interference_probe(m, sub, phi)
        assert p == pytest.approx((0.5, 0.5), abs=1e-12)


def test_probe_on_lone_photon():
    lone = PureState((PATH,), [S, S])
    assert subsystem_interference_probe(lone, 0, 0.0) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert subsystem_interference_probe(lone, 0, math.pi) == pytest.approx((0.0, 1.0), abs=1e-12)


# --- single photon collapse -------------------------------------------------------

def test_collapse_one_click_each_trial():
    r = run_single_photon_collapse(10_000, seed=2)
    clicks = (r.trials.outcomes == 0).sum(axis=1)
    assert np.all(clicks == 1)
    assert r.derived["unclicked_vacuum_probability"] == {"mode2_given_D1": 1.0, "mode1_given_D2": 1.0}


# --- double slit -------------------------------------------------------------------

G = SlitGeometry()


def test_intensity_peak_on_axis():
    x = G.screen(401)
    i = double_slit_intensity(x, G)
    assert np.argmax(i) == 200
    assert np.trapezoid(i, x) == pytest.approx(1.0, abs=1e-12)


def test_first_dark_fringe_position():
    x0 = G.wavelength * G.distance / (2 * G.separation)
    i = double_slit_intensity(np.array([0.0, x0]), G)
    assert i[1] / i[0] < 1e-30
    h = oracles.huygens_integral_oracle(np.array([0.0, x0, x0 * 0.5]), 2, G.separation, G.width, G.wavelength,
                                        G.distance)
    assert h[1] / h[0] < 1e-6


def test_single_slit_narrower_than_wavelength_has_no_zeros():
    g = SlitGeometry(slits=1, width=0.8)
    x = np.linspace(-g.distance, g.distance, 2001)
    i = double_slit_intensity(x, g)
    assert i.min() > 0.01 * i.max()
    assert np.all(np.diff(i[1000:]) < 0)  # monotone fall-off away from the axis


def test_visibility_is_one():
    assert fringe_visibility(G) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kwargs", [
    dict(separation=0.5, width=0.8), dict(width=0.0), dict(wavelength=-1.0), dict(distance=10.0), dict(slits=3),
])
def test_bad_geometry(kwargs):
    with pytest.raises(QuantumError):
        SlitGeometry(**kwargs)


def test_sample_impacts_deterministic_and_on_grid():
    x = G.screen(101)
    i = double_slit_intensity(x, G)
    a = sample_impacts(x, i, 10, seed=4)
    assert len(a) == 10 and np.array_equal(a, sample_impacts(x, i, 10, seed=4))
    assert set(a) <= set(x)


def test_sample_impacts_delta():
    x = np.linspace(0, 1, 11)
    w = np.zeros(11)
    w[3] = 1.0
    assert np.all(sample_impacts(x, w, 500, seed=1) == x[3])


def test_sample_impacts_zero_intensity():
    with pytest.raises(QuantumError):
        sample_impacts(np.arange(3.0), np.zeros(3), 5)
