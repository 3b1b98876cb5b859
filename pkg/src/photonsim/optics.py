"""Optical elements and interferometer circuits.

A photon's path is a dual-rail two-level subsystem: label index 0 is the first
path (path 1, or the solid path), index 1 the second. Beam splitters follow the
symmetric convention (1/sqrt 2) [[1, i], [i, 1]]: transmission keeps the
amplitude, reflection multiplies it by i.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

from .qcore import OPERATOR_TOL, PureState, QuantumError, Subsystem, apply_unitary, unitarity_deviation

TWO_PI = 2 * math.pi

Target = Union[int, str]


@dataclass(frozen=True)
class PhaseSetting:
    """A phase angle in radians, reduced into [0, 2*pi)."""

    angle: float = 0.0

    def __post_init__(self):
        a = float(self.angle)
        if not math.isfinite(a):
            raise QuantumError(f"phase must be finite, got {self.angle!r}")
        a = math.fmod(a, TWO_PI)
        if a < 0:
            a += TWO_PI
        if a >= TWO_PI:  # -tiny + 2pi can round up
            a = 0.0
        object.__setattr__(self, "angle", a)

    @classmethod
    def degrees(cls, deg: float) -> "PhaseSetting":
        return cls(math.radians(deg))

    @property
    def deg(self) -> float:
        return math.degrees(self.angle)

    def __float__(self):
        return self.angle


def as_phase(phi: Union[PhaseSetting, float]) -> PhaseSetting:
    return phi if isinstance(phi, PhaseSetting) else PhaseSetting(phi)


@dataclass(frozen=True, eq=False)
class OpticalElement:
    name: str
    matrix: np.ndarray
    targets: tuple[Target, ...]
    kind: str = "unitary"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", tuple(self.targets))
        dev = unitarity_deviation(m)
        if not dev < OPERATOR_TOL:
            raise QuantumError(f"element {self.name!r} is not unitary: max |U^dag U - I| = {dev:.3e}")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "name": self.name, "targets": list(self.targets)}
        d.update(self.params)
        return d


BS_MATRIX = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)


def beam_splitter_5050(target: Target = 0, name: str = "BS") -> OpticalElement:
    return OpticalElement(name, BS_MATRIX, (target,), kind="beam_splitter")


def phase_shifter(target: Target, phi: Union[PhaseSetting, float], branch: int = 1,
                  name: str = "phi") -> OpticalElement:
    """Multiply the amplitude of path ``branch`` of subsystem ``target`` by exp(i*phi)."""
    phi = as_phase(phi)
    if branch not in (0, 1):
        raise QuantumError(f"branch must be 0 or 1, got {branch}")
    diag = np.ones(2, dtype=complex)
    diag[branch] = np.exp(1j * phi.angle)
    return OpticalElement(name, np.diag(diag), (target,), kind="phase_shifter",
                          params={"phase_deg": phi.deg, "branch": branch})


def mirror(target: Target = 0, name: str = "M") -> OpticalElement:
    """Mirrors only bend the geometry; on the path amplitudes they act as identity."""
    return OpticalElement(name, np.eye(2), (target,), kind="mirror")


@dataclass(frozen=True)
class Circuit:
    layout: tuple[Subsystem, ...]
    elements: tuple[OpticalElement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layout", tuple(self.layout))
        object.__setattr__(self, "elements", tuple(self.elements))
        names = [s.name for s in self.layout]
        for el in self.elements:
            _check_element_fits(el, self.layout, names)

    def then(self, *elements: OpticalElement) -> "Circuit":
        return Circuit(self.layout, self.elements + elements)

    def to_dict(self) -> dict[str, Any]:
        return {
            "layout": [{"name": s.name, "labels": list(s.labels)} for s in self.layout],
            "elements": [el.to_dict() for el in self.elements],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Circuit":
        layout = tuple(Subsystem(s["name"], tuple(s["labels"])) for s in doc["layout"])
        elements = []
        for spec in doc["elements"]:
            kind = spec["kind"]
            targets = spec["targets"]
            name = spec.get("name", kind)
            if kind == "beam_splitter":
                elements.append(beam_splitter_5050(targets[0], name=name))
            elif kind == "phase_shifter":
                elements.append(phase_shifter(targets[0], PhaseSetting.degrees(spec["phase_deg"]),
                                              branch=spec.get("branch", 1), name=name))
            elif kind == "mirror":
                elements.append(mirror(targets[0], name=name))
            else:
                raise QuantumError(f"unknown element kind {kind!r}")
        return cls(layout, tuple(elements))

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def _check_element_fits(el: OpticalElement, layout: Sequence[Subsystem], names: Sequence[str]):
    dims = []
    for t in el.targets:
        if isinstance(t, str):
            if t not in names:
                raise QuantumError(f"element {el.name!r} targets unknown subsystem {t!r}")
            dims.append(layout[names.index(t)].dim)
        else:
            if not 0 <= t < len(layout):
                raise QuantumError(f"element {el.name!r} targets subsystem {t} outside layout of {len(layout)}")
            dims.append(layout[t].dim)
    if math.prod(dims) != el.matrix.shape[0]:
        raise QuantumError(f"element {el.name!r} has matrix size {el.matrix.shape[0]} "
                           f"but its targets span dimension {math.prod(dims)}")


def run_circuit(circuit: Circuit, state: PureState) -> PureState:
    names = list(state.names)
    for el in circuit.elements:
        try:
            _check_element_fits(el, state.subsystems, names)
        except QuantumError as exc:
            raise QuantumError(f"layout mismatch at element {el.name!r}: {exc}") from None
    if tuple(state.subsystems) != circuit.layout:
        raise QuantumError(f"input layout {state.names} does not match circuit layout "
                           f"{tuple(s.name for s in circuit.layout)}")
    for el in circuit.elements:
        state = apply_unitary(state, el.matrix, el.targets)
    return state
