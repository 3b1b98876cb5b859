import math

import numpy as np
import pytest

from photonsim import oracles
from photonsim.analysis import (
    LHV_BOUND,
    TSIRELSON,
    chsh,
    correlation_sweep,
    degree_of_correlation,
    impact_chisquare,
    lhv_bound_bruteforce,
    lhv_strategies,
    no_signaling_audit,
    overlapping_run_sigma,
    run_length_statistics,
)
from photonsim.experiments import RTOConfig, SlitGeometry, double_slit_intensity, run_rto, sample_impacts
from photonsim.optics import PhaseSetting
from photonsim.qcore import QuantumError
from photonsim.trials import TrialSet

deg = PhaseSetting.degrees


def test_correlation_analytic_zero_and_ninety():
    assert degree_of_correlation(run_rto(RTOConfig(0, 0))).correlation == pytest.approx(1.0, abs=1e-12)
    assert degree_of_correlation(run_rto(RTOConfig(0, deg(90)))).correlation == pytest.approx(0.0, abs=1e-12)


def test_correlation_all_same_trials():
    ts = TrialSet(("A", "B"), (("A1", "A2"), ("B1", "B2")), [[0, 0]] * 6 + [[1, 1]] * 4)
    c = degree_of_correlation(ts)
    assert c.correlation == 1.0 and c.standard_error == 0.0
    assert (c.n_same, c.n_diff, c.total) == (10, 0, 10)


def test_correlation_needs_trials():
    with pytest.raises(QuantumError):
        degree_of_correlation(TrialSet(("A", "B"), (("A1", "A2"), ("B1", "B2")), np.zeros((0, 2))))


def test_correlation_symmetric_under_side_swap():
    rng = np.random.default_rng(0)
    out = rng.integers(0, 2, size=(500, 2))
    ts = TrialSet(("A", "B"), (("A1", "A2"), ("B1", "B2")), out)
    swapped = TrialSet(("B", "A"), (("B1", "B2"), ("A1", "A2")), out[:, ::-1])
    assert degree_of_correlation(ts) == degree_of_correlation(swapped)
    joint = run_rto(RTOConfig(deg(10), deg(73)))
    m = np.array(list(joint.analytic.values())).reshape(2, 2)
    assert degree_of_correlation(m).correlation == pytest.approx(degree_of_correlation(m.T).correlation, abs=1e-15)


def test_correlation_rejects_bad_joint():
    with pytest.raises(QuantumError):
        degree_of_correlation(np.array([[0.5, 0.5], [0.5, 0.5]]))


def test_chsh_optimal_settings():
    res = chsh(0, deg(90), deg(45), deg(135))
    assert res.S == pytest.approx(TSIRELSON, abs=1e-9)
    assert res.lhv_bound == 2.0


def test_chsh_matches_oracle_correlations():
    a, a2, b, b2 = 0.3, 1.9, 0.8, 2.6
    res = chsh(a, a2, b, b2)
    c = lambda x, y: oracles.rto_oracle(x, y)["correlation"]
    expected = c(a, b) - c(a, b2) + c(a2, b) + c(a2, b2)
    assert res.S == pytest.approx(expected, abs=1e-12)


def test_chsh_degenerate_settings():
    assert chsh(0.4, 0.4, 0.4, 0.4).S == pytest.approx(2.0, abs=1e-12)


def test_chsh_sampled_is_reproducible():
    a = chsh(0, deg(90), deg(45), deg(135), trials=2000, seed=5)
    b = chsh(0, deg(90), deg(45), deg(135), trials=2000, seed=5)
    assert a.S == b.S and a.standard_error > 0


def test_lhv_enumeration():
    strategies = lhv_strategies()
    assert len(strategies) == 16
    assert all(abs(s) <= 2 for _, s in strategies)
    assert lhv_bound_bruteforce() == 2.0 == LHV_BOUND


def test_no_signaling_analytic_single_point():
    assert no_signaling_audit([0.0], [0.0]) < 1e-15


def test_no_signaling_empty_grid():
    with pytest.raises(QuantumError):
        no_signaling_audit([], [0.0])


def test_run_length_all_d1():
    res = run_length_statistics(["D1"] * 100, 10)
    assert res.n_windows == 91 and res.n_runs == 91


def test_run_length_k1_is_symbol_fraction():
    seq = np.array(["D1", "D2", "D1", "D1"])
    res = run_length_statistics(seq, 1)
    assert res.observed_fraction == 0.75 and res.expected_fraction == 0.5


def test_run_length_errors():
    with pytest.raises(QuantumError):
        run_length_statistics(["D1"] * 5, 0)
    with pytest.raises(QuantumError):
        run_length_statistics(["D1"] * 5, 6)


def test_overlapping_sigma_against_simulation():
    # brute-force the spread of the window fraction over many short fair sequences
    rng = np.random.default_rng(1)
    k, n = 3, 200
    fractions = []
    for _ in range(4000):
        seq = rng.integers(0, 2, n)
        fractions.append(run_length_statistics(seq, k, symbol=1).observed_fraction)
    predicted = overlapping_run_sigma(n - k + 1, k)
    assert np.std(fractions) == pytest.approx(predicted, rel=0.05)


def test_impact_chisquare_accepts_own_distribution():
    g = SlitGeometry()
    x = g.screen(401)
    i = double_slit_intensity(x, g)
    pos = sample_impacts(x, i, 5000, seed=8)
    chi2, p, dof = impact_chisquare(pos, x, i)
    assert dof > 10 and p > 0.01


def test_impact_chisquare_rejects_wrong_distribution():
    g = SlitGeometry()
    x = g.screen(401)
    single = double_slit_intensity(x, SlitGeometry(slits=1))
    pos = sample_impacts(x, single, 5000, seed=8)
    _, p, _ = impact_chisquare(pos, x, double_slit_intensity(x, g))
    assert p < 1e-6


def test_correlation_sweep_columns():
    rows = correlation_sweep(np.radians([0, 90, 180]), trials=100, seed=1)
    assert list(rows[0]) == ["phase_diff_deg", "C_analytic", "C_sampled", "stderr"]
    assert rows[2]["C_analytic"] == pytest.approx(-1.0, abs=1e-12)
