"""Simulated experiments: interferometers, entangled pairs, detection, slits.

Each ``run_*`` function returns an :class:`ExperimentResult` holding exact
(Born-rule) probabilities and, when ``trials`` is positive, a seeded
:class:`~photonsim.trials.TrialSet` drawn from those probabilities.

Detector wiring. After the final beam splitter of the single-photon
interferometer, output port 1 feeds D1 and port 0 feeds D2; with the symmetric
beam-splitter convention this gives P(D1) = cos^2(dphi / 2), dphi = phi1 - phi2.
The pair experiment uses the same wiring on side A (port 1 -> A1) and the
mirror-image wiring on side B (port 0 -> B1), since B's splitter faces the
opposite way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np

from .optics import (
    Circuit,
    PhaseSetting,
    as_phase,
    beam_splitter_5050,
    mirror,
    phase_shifter,
    run_circuit,
)
from .qcore import (
    DensityOperator,
    PureState,
    QuantumError,
    Subsystem,
    apply_unitary,
    born_probabilities,
    marginal_probabilities,
    partial_trace,
    tensor,
)
from .trials import TrialSet, check_seed, sample_categorical, uniforms

PATH = Subsystem("path", ("1", "2"))
DETECTORS = ("D1", "D2")
PORT_OF_DETECTOR = {"D1": 1, "D2": 0}

PATH_A = Subsystem("A", ("solid", "dashed"))
PATH_B = Subsystem("B", ("solid", "dashed"))
A_DETECTORS = ("A1", "A2")
B_DETECTORS = ("B1", "B2")
A_PORT = {"A1": 1, "A2": 0}
B_PORT = {"B1": 0, "B2": 1}

# Reference table values as printed; the 45/135 degree rows disagree with cos^2.
REFERENCE_PHASES_DEG = (0.0, 45.0, 90.0, 135.0, 180.0)
REFERENCE_PRINTED_P1 = (1.00, 0.71, 0.50, 0.29, 0.00)
REFERENCE_PRINTED_CORR = (1.00, 0.71, 0.50, 0.29, 0.00)

EDC_DEFAULT_DELAYS = 16


@dataclass(frozen=True)
class MZConfig:
    phi1: PhaseSetting = PhaseSetting(0.0)
    phi2: PhaseSetting = PhaseSetting(0.0)
    bs2_present: bool = True

    def __post_init__(self):
        object.__setattr__(self, "phi1", as_phase(self.phi1))
        object.__setattr__(self, "phi2", as_phase(self.phi2))

    @property
    def phase_difference(self) -> float:
        return self.phi1.angle - self.phi2.angle

    def to_dict(self) -> dict[str, Any]:
        return {"phi1_deg": self.phi1.deg, "phi2_deg": self.phi2.deg, "bs2_present": self.bs2_present}


@dataclass(frozen=True)
class RTOConfig:
    phiA: PhaseSetting = PhaseSetting(0.0)
    phiB: PhaseSetting = PhaseSetting(0.0)

    def __post_init__(self):
        object.__setattr__(self, "phiA", as_phase(self.phiA))
        object.__setattr__(self, "phiB", as_phase(self.phiB))

    def to_dict(self) -> dict[str, Any]:
        return {"phiA_deg": self.phiA.deg, "phiB_deg": self.phiB.deg}


@dataclass(frozen=True)
class WavePacketEnvelope:
    """Rectangular packet of duration ``total_duration``; BS2 goes in at ``insertion_delay``."""

    total_duration: float = 1.0
    insertion_delay: float = 0.0

    def __post_init__(self):
        T, t = float(self.total_duration), float(self.insertion_delay)
        if not (math.isfinite(T) and T > 0):
            raise QuantumError(f"total duration must be positive, got {self.total_duration!r}")
        if not (math.isfinite(t) and 0 <= t <= T):
            raise QuantumError(f"insertion delay must lie in [0, {T}], got {self.insertion_delay!r}")

    @property
    def front_fraction(self) -> float:
        return self.insertion_delay / self.total_duration

    @classmethod
    def from_fraction(cls, r: float) -> "WavePacketEnvelope":
        return cls(1.0, r)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    analytic: dict[str, Any]
    trials: Optional[TrialSet] = None
    metadata: dict[str, Any] = field(default_factory=dict)
    derived: dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self) -> Optional[int]:
        return self.metadata.get("seed")

    @property
    def n_trials(self) -> int:
        return self.metadata.get("n_trials", 0)

    def to_dict(self, include_trials: bool = True) -> dict[str, Any]:
        d: dict[str, Any] = {"config": self.metadata.get("config", {}), "analytic": self.analytic}
        if include_trials and self.trials is not None:
            d["trials"] = self.trials.to_records()
        d["seed"] = self.seed
        d["n_trials"] = self.n_trials
        if self.derived:
            d["derived"] = self.derived
        return d


def _metadata(config: dict[str, Any], seed: Optional[int], n_trials: int) -> dict[str, Any]:
    return {"config": config, "seed": seed, "n_trials": n_trials}


def _check_trials(trials: int, minimum: int = 0) -> int:
    trials = int(trials)
    if trials < minimum:
        raise QuantumError(f"trials must be at least {minimum}, got {trials}")
    return trials


def _sample(probs: Sequence[float], seed: int, stream: str, n: int, start: int = 0) -> np.ndarray:
    return sample_categorical(probs, uniforms(seed, stream, n, start))


# --- single-photon interferometer ---------------------------------------------

def mach_zehnder_circuit(config: MZConfig) -> Circuit:
    elements = [
        beam_splitter_5050(0, name="BS1"),
        mirror(0, name="M1"),
        mirror(0, name="M2"),
        phase_shifter(0, config.phi1, branch=0, name="phi1"),
        phase_shifter(0, config.phi2, branch=1, name="phi2"),
    ]
    if config.bs2_present:
        elements.append(beam_splitter_5050(0, name="BS2"))
    return Circuit((PATH,), tuple(elements))


def photon_input() -> PureState:
    return PureState.basis((PATH,), "1")


def detector_probabilities(state: PureState, subsystem: Union[int, str] = 0) -> dict[str, float]:
    """Read a two-port output through the D1/D2 wiring."""
    ports = list(marginal_probabilities(state, subsystem).values())
    return {d: ports[PORT_OF_DETECTOR[d]] for d in DETECTORS}


def _mz_probs(config: MZConfig) -> dict[str, float]:
    return detector_probabilities(run_circuit(mach_zehnder_circuit(config), photon_input()))


def run_mach_zehnder(config: MZConfig, trials: int = 0, seed: int = 0, stream: str = "mz") -> ExperimentResult:
    """Single photon through BS1, both phase shifters, and BS2 if present."""
    trials = _check_trials(trials)
    seed = check_seed(seed)
    probs = _mz_probs(config)
    ts = None
    if trials:
        idx = _sample([probs[d] for d in DETECTORS], seed, stream, trials)
        ts = TrialSet(("detector",), (DETECTORS,), idx)
    return ExperimentResult(probs, ts, _metadata(config.to_dict(), seed, trials))


def run_delayed_choice(phase: Union[PhaseSetting, float], trials: int, seed: int = 0) -> ExperimentResult:
    """Random BS2 insertion after the photon has already passed BS1.

    The coin for trial ``i`` and its detection draw come from separate
    streams keyed by ``i``, so each trial is reproducible on its own.
    """
    phase = as_phase(phase)
    trials = _check_trials(trials, 1)
    seed = check_seed(seed)
    with_bs2 = _mz_probs(MZConfig(phase, PhaseSetting(0.0), True))
    without_bs2 = _mz_probs(MZConfig(phase, PhaseSetting(0.0), False))
    inserted = uniforms(seed, "delayed-choice/coin", trials) < 0.5
    u = uniforms(seed, "delayed-choice/detect", trials)
    idx = np.where(inserted,
                   sample_categorical([with_bs2[d] for d in DETECTORS], u),
                   sample_categorical([without_bs2[d] for d in DETECTORS], u))
    ts = TrialSet(("detector",), (DETECTORS,), idx, settings=inserted.astype(np.int64),
                  setting_names=("bs2_absent", "bs2_inserted"))
    analytic = {"bs2_inserted": with_bs2, "bs2_absent": without_bs2}
    return ExperimentResult(analytic, ts, _metadata({"phase_deg": phase.deg}, seed, trials))


SEGMENT = Subsystem("segment", ("front", "back"))


def run_encounter_delayed_choice(phase: Union[PhaseSetting, float],
                                 envelope: WavePacketEnvelope) -> ExperimentResult:
    """BS2 inserted while the packet is crossing.

    The packet is split into a front temporal mode (weight r, already past
    the crossing when BS2 arrives) and a back mode (weight 1 - r). BS2 acts
    only on the back mode; the detectors integrate over time, so the two
    modes are summed incoherently.
    """
    phase = as_phase(phase)
    r = envelope.front_fraction
    seg = PureState((SEGMENT,), np.array([math.sqrt(r), math.sqrt(1.0 - r)], dtype=complex))
    state = tensor(seg, photon_input())
    state = apply_unitary(state, beam_splitter_5050().matrix, ["path"])
    state = apply_unitary(state, phase_shifter("path", phase, branch=0).matrix, ["path"])
    crossing = born_probabilities(state)
    bs2 = beam_splitter_5050().matrix
    back_only = np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), bs2]])
    state = apply_unitary(state, back_only, ["segment", "path"])
    probs = detector_probabilities(state, "path")
    subwaves = {f"{seg_label}/path{path_label}": p for (seg_label, path_label), p in crossing.items()}
    per_segment = {}
    for seg_label in SEGMENT.labels:
        w = marginal_probabilities(state, "segment")[seg_label]
        if w > 0:
            amp = state.amplitudes.reshape(2, 2)[SEGMENT.index(seg_label)] / math.sqrt(w)
            part = PureState((PATH,), amp)
            per_segment[seg_label] = detector_probabilities(part)
    config = {"phase_deg": phase.deg, "total_duration": envelope.total_duration,
              "insertion_delay": envelope.insertion_delay, "delay_fraction": r}
    derived = {"subwave_weights": subwaves, "segment_detectors": per_segment}
    return ExperimentResult(probs, None, _metadata(config, None, 0), derived)


def edc_sweep(phase: Union[PhaseSetting, float], n_delays: int = EDC_DEFAULT_DELAYS,
              total_duration: float = 1.0) -> list[ExperimentResult]:
    """Uniformly spaced insertion delays from 0 to T inclusive."""
    if n_delays < 1:
        raise QuantumError("need at least one delay")
    delays = np.linspace(0.0, total_duration, n_delays) if n_delays > 1 else np.array([0.0])
    return [run_encounter_delayed_choice(phase, WavePacketEnvelope(total_duration, float(t)))
            for t in delays]


# --- entangled pair ----------------------------------------------------------

def rto_source_state() -> PureState:
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / math.sqrt(2)  # |solid, solid> + |dashed, dashed>
    return PureState((PATH_A, PATH_B), amps)


def rto_circuit(config: RTOConfig) -> Circuit:
    # A's shifter on the solid arm, B's on the dashed arm: one per path.
    return Circuit((PATH_A, PATH_B), (
        phase_shifter("A", config.phiA, branch=0, name="phiA"),
        phase_shifter("B", config.phiB, branch=1, name="phiB"),
        beam_splitter_5050("A", name="BS_A"),
        beam_splitter_5050("B", name="BS_B"),
    ))


def rto_joint(config: RTOConfig) -> np.ndarray:
    """2x2 joint distribution indexed [A detector, B detector] in (1, 2) order."""
    state = run_circuit(rto_circuit(config), rto_source_state())
    ports = (np.abs(state.amplitudes) ** 2).reshape(2, 2)
    a_rows = [A_PORT[a] for a in A_DETECTORS]
    b_cols = [B_PORT[b] for b in B_DETECTORS]
    return ports[np.ix_(a_rows, b_cols)]


def run_rto(config: RTOConfig, trials: int = 0, seed: int = 0, stream: str = "rto") -> ExperimentResult:
    """Entangled pair over the solid and dashed paths, one splitter per side."""
    trials = _check_trials(trials)
    seed = check_seed(seed)
    joint = rto_joint(config)
    analytic = {f"{a},{b}": float(joint[i, j])
                for i, a in enumerate(A_DETECTORS) for j, b in enumerate(B_DETECTORS)}
    derived = {
        "marginal_A": dict(zip(A_DETECTORS, joint.sum(axis=1).tolist())),
        "marginal_B": dict(zip(B_DETECTORS, joint.sum(axis=0).tolist())),
        "p_same": float(joint[0, 0] + joint[1, 1]),
    }
    ts = None
    if trials:
        flat = _sample(joint.ravel(), seed, stream, trials)
        ts = TrialSet(("A", "B"), (A_DETECTORS, B_DETECTORS), np.stack([flat // 2, flat % 2], axis=1))
    return ExperimentResult(analytic, ts, _metadata(config.to_dict(), seed, trials), derived)


# --- measurement state -------------------------------------------------------

PHOTON = Subsystem("photon", ("1", "2"))
DETECTOR = Subsystem("detector", ("D1", "D2"))


def build_measurement_state() -> PureState:
    """(|1, D1> + |2, D2>)/sqrt 2: photon path entangled with the detector pair."""
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / math.sqrt(2)
    return PureState((PHOTON, DETECTOR), amps)


QUARTER_WAVE = math.pi / 2


def subsystem_interference_probe(state: PureState, subsystem: Union[int, str],
                                 phi: Union[PhaseSetting, float]) -> tuple[float, float]:
    """Try to make one subsystem interfere with itself; return (P(D1), P(D2)).

    Phase ``phi`` goes on the subsystem's first branch and a fixed quarter-wave
    lag on the second, standing in for the reflection phase a beam splitter
    would have given it, then a 50/50 splitter recombines the branches. A lone
    coherent (|1> + |2>)/sqrt 2 therefore gives cos^2(phi/2) at D1.
    """
    k = state.subsystem_index(subsystem)
    if state.subsystems[k].dim != 2:
        raise QuantumError(f"subsystem {state.subsystems[k].name!r} is not two-level")
    phi = as_phase(phi)
    diag = np.diag([np.exp(1j * phi.angle), np.exp(1j * QUARTER_WAVE)])
    out = apply_unitary(state, beam_splitter_5050().matrix @ diag, [k])
    p = detector_probabilities(out, k)
    return p["D1"], p["D2"]


MODE1 = Subsystem("mode1", ("occupied", "vacuum"))
MODE2 = Subsystem("mode2", ("occupied", "vacuum"))
CLICK_LABELS = ("click", "no_click")


def single_excitation_state() -> PureState:
    """(|occupied, vacuum> + |vacuum, occupied>)/sqrt 2 over two detector modes."""
    amps = np.zeros(4, dtype=complex)
    amps[1] = amps[2] = 1 / math.sqrt(2)
    return PureState((MODE1, MODE2), amps)


def conditional_state(state: PureState, subsystem: Union[int, str], label: str,
                      keep: Union[int, str]) -> DensityOperator:
    """Reduced state of ``keep`` after ``subsystem`` was found in ``label``."""
    k = state.subsystem_index(subsystem)
    j = state.subsystems[k].index(label)
    psi = np.moveaxis(state.amplitudes.reshape(state.dims), k, 0).copy()
    psi[np.arange(psi.shape[0]) != j] = 0
    psi = np.moveaxis(psi, 0, k).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise QuantumError(f"outcome {label!r} on {state.subsystems[k].name!r} has zero probability")
    return partial_trace(PureState(state.subsystems, psi / norm), [keep])


def run_single_photon_collapse(trials: int, seed: int = 0) -> ExperimentResult:
    """One excitation shared by two detector modes; each trial fires exactly one."""
    trials = _check_trials(trials, 1)
    seed = check_seed(seed)
    state = single_excitation_state()
    joint = born_probabilities(state)
    keys = list(joint)
    flat = _sample([joint[k] for k in keys], seed, "collapse", trials)
    # occupied -> click; index 0 of each mode is "occupied"
    occupation = np.array([[MODE1.index(k[0]), MODE2.index(k[1])] for k in keys])[flat]
    ts = TrialSet(("D1", "D2"), (CLICK_LABELS, CLICK_LABELS), occupation)
    analytic = {"D1": marginal_probabilities(state, "mode1")["occupied"],
                "D2": marginal_probabilities(state, "mode2")["occupied"]}
    after_d1 = conditional_state(state, "mode1", "occupied", "mode2")
    after_d2 = conditional_state(state, "mode2", "occupied", "mode1")
    derived = {
        "joint": {"/".join(k): v for k, v in joint.items()},
        "unclicked_vacuum_probability": {
            "mode2_given_D1": float(np.real(after_d1.matrix[1, 1])),
            "mode1_given_D2": float(np.real(after_d2.matrix[1, 1])),
        },
    }
    return ExperimentResult(analytic, ts, _metadata({}, seed, trials), derived)


# --- double slit -------------------------------------------------------------

@dataclass(frozen=True)
class SlitGeometry:
    """Lengths in any common unit. Defaults are in wavelengths."""

    slits: int = 2
    separation: float = 4.0
    width: float = 0.8
    wavelength: float = 1.0
    distance: float = 1.0e4

    def __post_init__(self):
        if self.slits not in (1, 2):
            raise QuantumError(f"slits must be 1 or 2, got {self.slits}")
        vals = (self.separation, self.width, self.wavelength, self.distance)
        if not all(math.isfinite(v) for v in vals):
            raise QuantumError("geometry values must be finite")
        if self.width <= 0 or self.wavelength <= 0 or self.distance <= 0:
            raise QuantumError("slit width, wavelength and screen distance must be positive")
        if self.slits == 2 and not self.separation > self.width:
            raise QuantumError(f"slit separation {self.separation} must exceed width {self.width}")
        aperture = self.separation + self.width if self.slits == 2 else self.width
        if self.distance < 100 * aperture:
            raise QuantumError("screen must be far from the slits (distance >= 100 x aperture)")

    def screen(self, points: int = 401, half_width: Optional[float] = None) -> np.ndarray:
        if points < 2:
            raise QuantumError("need at least two screen points")
        half = self.distance / 2 if half_width is None else half_width
        return np.linspace(-half, half, points)

    def to_dict(self) -> dict[str, Any]:
        return {"slits": self.slits, "separation": self.separation, "width": self.width,
                "wavelength": self.wavelength, "distance": self.distance}


def double_slit_intensity(x: Sequence[float], geometry: SlitGeometry) -> np.ndarray:
    """Far-field intensity on the screen, normalized to unit integral over ``x``."""
    x = np.asarray(x, dtype=float)
    g = geometry
    scale = x / (g.wavelength * g.distance)
    intensity = np.sinc(g.width * scale) ** 2  # np.sinc(t) = sin(pi t)/(pi t)
    if g.slits == 2:
        intensity = intensity * np.cos(math.pi * g.separation * scale) ** 2
    return intensity / np.trapezoid(intensity, x)


def fringe_visibility(geometry: SlitGeometry) -> float:
    """(Imax - Imin)/(Imax + Imin) between the central maximum and the first dark fringe."""
    if geometry.slits != 2:
        raise QuantumError("fringe visibility needs two slits")
    first_dark = geometry.wavelength * geometry.distance / (2 * geometry.separation)
    i_max, i_min = double_slit_intensity(np.array([0.0, first_dark]), geometry)
    return float((i_max - i_min) / (i_max + i_min))


def sample_impacts(x: Sequence[float], intensity: Sequence[float], n: int, seed: int = 0) -> np.ndarray:
    """Screen positions of ``n`` independent impacts drawn from ``intensity`` on grid ``x``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(intensity, dtype=float)
    if n < 1:
        raise QuantumError(f"need at least one impact, got {n}")
    if w.shape != x.shape:
        raise QuantumError("intensity and screen grid must have the same shape")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise QuantumError("intensity must be finite and non-negative")
    if not w.sum() > 0:
        raise QuantumError("intensity is zero everywhere")
    return x[_sample(w / w.sum(), check_seed(seed), "impacts", n)]
