"""Statistics over sampled trials and exact distributions.

Correlations use the +1/-1 encoding (detector 1 -> +1, detector 2 -> -1), so
the degree of correlation is P(same) - P(different).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .experiments import ExperimentResult, RTOConfig, run_rto
from .optics import PhaseSetting, as_phase
from .qcore import QuantumError
from .trials import TrialSet

TSIRELSON = 2 * math.sqrt(2)
LHV_BOUND = 2.0


@dataclass(frozen=True)
class CorrelationSummary:
    correlation: float
    standard_error: float
    p_same: float
    p_diff: float
    n_same: Optional[int] = None
    n_diff: Optional[int] = None

    @property
    def total(self) -> Optional[int]:
        return None if self.n_same is None else self.n_same + self.n_diff

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _joint_matrix(source) -> np.ndarray:
    if isinstance(source, ExperimentResult):
        keys = list(source.analytic)
        if len(keys) != 4:
            raise QuantumError("expected a two-sided result with a 2x2 joint table")
        return np.array([source.analytic[k] for k in keys], dtype=float).reshape(2, 2)
    joint = np.asarray(source, dtype=float)
    if joint.shape != (2, 2):
        raise QuantumError(f"joint distribution must be 2x2, got shape {joint.shape}")
    if np.any(joint < 0) or abs(joint.sum() - 1.0) > 1e-12:
        raise QuantumError("joint distribution must be non-negative and sum to 1")
    return joint


def degree_of_correlation(source: Union[TrialSet, ExperimentResult, np.ndarray]) -> CorrelationSummary:
    """C = P(same) - P(different), exactly from a distribution or estimated from trials.

    An ``ExperimentResult`` is read through its analytic joint table; pass
    ``result.trials`` to estimate from samples instead. The sampled standard
    error is sqrt((1 - C^2)/N), which is 0 when every trial agrees.
    """
    if isinstance(source, TrialSet):
        n = len(source)
        if n == 0:
            raise QuantumError("no trials to correlate")
        if len(source.sides) != 2:
            raise QuantumError("correlation needs exactly two sides")
        same = int(np.count_nonzero(source.outcomes[:, 0] == source.outcomes[:, 1]))
        diff = n - same
        c = (same - diff) / n
        se = math.sqrt(max(0.0, 1.0 - c * c) / n)
        return CorrelationSummary(c, se, same / n, diff / n, same, diff)
    joint = _joint_matrix(source)
    p_same = float(joint[0, 0] + joint[1, 1])
    p_diff = float(joint[0, 1] + joint[1, 0])
    return CorrelationSummary(p_same - p_diff, 0.0, p_same, p_diff)


@dataclass(frozen=True)
class CHSHResult:
    settings: tuple[float, float, float, float]  # a, a', b, b' in radians
    correlations: dict[str, float]
    S: float
    lhv_bound: float = LHV_BOUND
    standard_error: Optional[float] = None
    n_trials: int = 0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["settings_deg"] = [math.degrees(s) for s in self.settings]
        del d["settings"]
        return d


CHSH_TERMS = (("a", "b", +1), ("a", "b2", -1), ("a2", "b", +1), ("a2", "b2", +1))


def chsh(a, a2, b, b2, trials: int = 0, seed: int = 0) -> CHSHResult:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b') for the entangled pair.

    With ``trials`` > 0 each of the four setting pairs is sampled from its own
    stream and E is estimated from counts; otherwise E is exact.
    """
    angles = {"a": as_phase(a), "a2": as_phase(a2), "b": as_phase(b), "b2": as_phase(b2)}
    correlations = {}
    variance = 0.0
    s = 0.0
    for x, y, sign in CHSH_TERMS:
        result = run_rto(RTOConfig(angles[x], angles[y]), trials=trials, seed=seed, stream=f"chsh/{x},{y}")
        summary = degree_of_correlation(result.trials if trials else result)
        correlations[f"E({x},{y})"] = summary.correlation
        s += sign * summary.correlation
        variance += summary.standard_error ** 2
    settings = tuple(angles[k].angle for k in ("a", "a2", "b", "b2"))
    se = math.sqrt(variance) if trials else None
    return CHSHResult(settings, correlations, s, LHV_BOUND, se, trials)


def lhv_strategies() -> list[tuple[tuple[int, int, int, int], int]]:
    """Every deterministic local strategy (A(a), A(a'), B(b), B(b')) with its S."""
    out = []
    for A_a, A_a2, B_b, B_b2 in itertools.product((+1, -1), repeat=4):
        s = A_a * B_b - A_a * B_b2 + A_a2 * B_b + A_a2 * B_b2
        out.append(((A_a, A_a2, B_b, B_b2), s))
    return out


def lhv_bound_bruteforce() -> float:
    return float(max(abs(s) for _, s in lhv_strategies()))


def no_signaling_audit(phases_a: Iterable, phases_b: Iterable, trials: int = 0, seed: int = 0) -> float:
    """Largest |P - 1/2| over both sides' marginals across the (phiA, phiB) grid."""
    phases_a = [as_phase(p) for p in phases_a]
    phases_b = [as_phase(p) for p in phases_b]
    if not phases_a or not phases_b:
        raise QuantumError("phase grid is empty")
    worst = 0.0
    for i, pa in enumerate(phases_a):
        for j, pb in enumerate(phases_b):
            result = run_rto(RTOConfig(pa, pb), trials=trials, seed=seed, stream=f"no-signal/{i},{j}")
            if trials:
                marg_a = result.trials.counts("A")["A1"] / trials
                marg_b = result.trials.counts("B")["B1"] / trials
            else:
                marg_a = result.derived["marginal_A"]["A1"]
                marg_b = result.derived["marginal_B"]["B1"]
            worst = max(worst, abs(marg_a - 0.5), abs(marg_b - 0.5))
    return worst


@dataclass(frozen=True)
class RunLengthResult:
    k: int
    n_windows: int
    n_runs: int
    observed_fraction: float
    expected_fraction: float
    sigma: float
    z: float
    chi2: float
    p_value: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def overlapping_run_sigma(n_windows: int, k: int, q: float = 0.5) -> float:
    """Standard deviation of the fraction of length-k windows that are all one symbol.

    Windows overlap, so neighbours within k - 1 positions are correlated:
    cov(X_i, X_{i+j}) = q^(k+j) - q^(2k) for 0 < j < k.
    """
    p = q ** k
    var = n_windows * p * (1 - p)
    for j in range(1, min(k, n_windows)):
        var += 2 * (n_windows - j) * (q ** (k + j) - p * p)
    return math.sqrt(var) / n_windows


def run_length_statistics(outcomes: Sequence, k: int, symbol: Any = "D1") -> RunLengthResult:
    """Frequency of k-in-a-row ``symbol`` windows against the fair i.i.d. rate 2^-k.

    Every start position with k following positions is a window. The
    chi-square test uses non-overlapping k-blocks (all ``symbol``, none
    ``symbol``, mixed) so its cells are independent.
    """
    if k < 1:
        raise QuantumError(f"run length must be at least 1, got {k}")
    hits = np.asarray(outcomes) == symbol
    n = hits.size
    if n < k:
        raise QuantumError(f"sequence of length {n} is shorter than k = {k}")
    csum = np.concatenate(([0], np.cumsum(hits, dtype=np.int64)))
    window_sums = csum[k:] - csum[:-k]
    n_windows = window_sums.size
    n_runs = int(np.count_nonzero(window_sums == k))
    expected = 0.5 ** k
    observed = n_runs / n_windows
    sigma = overlapping_run_sigma(n_windows, k)
    z = (observed - expected) / sigma

    blocks = hits[: (n // k) * k].reshape(-1, k).sum(axis=1)
    counts = np.array([np.count_nonzero(blocks == k), np.count_nonzero(blocks == 0), 0])
    counts[2] = blocks.size - counts[0] - counts[1]
    probs = np.array([expected, expected, 1 - 2 * expected])
    live = probs > 0
    chi2, p_value = stats.chisquare(counts[live], blocks.size * probs[live])
    return RunLengthResult(k, n_windows, n_runs, observed, expected, sigma, float(z), float(chi2), float(p_value))


def impact_chisquare(positions: Sequence[float], x: Sequence[float], intensity: Sequence[float],
                     n_bins: int = 40, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Goodness of fit of sampled impacts to the intensity they were drawn from.

    The grid is cut into ``n_bins`` contiguous groups of points; neighbouring
    groups are merged until each expects at least ``min_expected`` impacts.
    Returns (chi2, p_value, degrees of freedom).
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(intensity, dtype=float)
    p = w / w.sum()
    idx = np.searchsorted(x, np.asarray(positions, dtype=float))
    if np.any(idx >= x.size) or not np.allclose(x[np.minimum(idx, x.size - 1)], positions):
        raise QuantumError("impact positions must lie on the screen grid")
    observed_pts = np.bincount(idx, minlength=x.size)
    n = observed_pts.sum()
    groups = np.array_split(np.arange(x.size), n_bins)
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for g in groups:
        acc_o += observed_pts[g].sum()
        acc_e += n * p[g].sum()
        if acc_e >= min_expected:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if obs:
            obs[-1] += acc_o
            exp[-1] += acc_e
        else:
            obs.append(acc_o)
            exp.append(acc_e)
    if len(obs) < 2:
        raise QuantumError("too few populated bins for a chi-square test")
    chi2, p_value = stats.chisquare(obs, exp)
    return float(chi2), float(p_value), len(obs) - 1


def correlation_sweep(phase_diffs: Sequence[float], trials: int = 0, seed: int = 0,
                      phiA: Union[PhaseSetting, float] = 0.0) -> list[dict[str, float]]:
    """C versus phiB - phiA with phiA held fixed; sampled columns when ``trials`` > 0."""
    phiA = as_phase(phiA)
    rows = []
    for i, d in enumerate(phase_diffs):
        config = RTOConfig(phiA, PhaseSetting(phiA.angle + d))
        result = run_rto(config, trials=trials, seed=seed, stream=f"sweep/{i}")
        row = {"phase_diff_deg": math.degrees(d), "C_analytic": degree_of_correlation(result).correlation}
        if trials:
            sampled = degree_of_correlation(result.trials)
            row["C_sampled"] = sampled.correlation
            row["stderr"] = sampled.standard_error
        rows.append(row)
    return rows
