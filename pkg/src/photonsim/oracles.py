"""Brute-force reference calculations.

Nothing here imports from the rest of the package. Matrices are nested lists
of Python complex numbers multiplied with explicit loops, and every optical
convention is written out again by hand, so a mistake in the main code path
cannot silently cancel against the same mistake here.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

R = 1 / math.sqrt(2)


@dataclass
class OracleReport:
    case: str
    oracle: list
    main: list
    max_abs_diff: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff < self.tolerance

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d)


def compare(case: str, oracle_values, main_values, tolerance: float) -> OracleReport:
    o = [float(v) for v in oracle_values]
    m = [float(v) for v in main_values]
    if len(o) != len(m):
        raise ValueError(f"{case}: {len(o)} oracle values vs {len(m)} main values")
    diff = max((abs(a - b) for a, b in zip(o, m)), default=0.0)
    return OracleReport(case, o, m, diff, tolerance)


def matvec(matrix, vector):
    n_rows = len(matrix)
    if any(len(row) != len(vector) for row in matrix):
        raise ValueError("matrix column count does not match vector length")
    out = []
    for i in range(n_rows):
        acc = 0j
        for j in range(len(vector)):
            acc += matrix[i][j] * vector[j]
        out.append(acc)
    return out


def matmul(a, b):
    if any(len(row) != len(b) for row in a):
        raise ValueError("inner dimensions do not match")
    cols = len(b[0])
    out = [[0j] * cols for _ in a]
    for i in range(len(a)):
        for j in range(cols):
            acc = 0j
            for k in range(len(b)):
                acc += a[i][k] * b[k][j]
            out[i][j] = acc
    return out


def kron(a, b):
    out = []
    for i in range(len(a)):
        for k in range(len(b)):
            row = []
            for j in range(len(a[0])):
                for l in range(len(b[0])):
                    row.append(a[i][j] * b[k][l])
            out.append(row)
    return out


def matrix_chain_oracle(matrices, vector):
    """Apply ``matrices`` to ``vector`` in order (first matrix acts first)."""
    v = [complex(x) for x in vector]
    for m in matrices:
        if len(m) != len(v):
            raise ValueError(f"matrix with {len(m)} rows cannot act on a vector of length {len(v)}")
        v = matvec(m, v)
    return v


def _bs():
    return [[R, 1j * R], [1j * R, R]]


def _phase(e0, e1):
    return [[cmath.exp(1j * e0), 0], [0, cmath.exp(1j * e1)]]


def _eye():
    return [[1, 0], [0, 1]]


def mz_oracle(phi1: float, phi2: float, bs2: bool = True) -> tuple[float, float]:
    """(P(D1), P(D2)) for a photon entering on path 1. D1 sits on output port 1."""
    chain = [_bs(), _phase(phi1, phi2)]
    if bs2:
        chain.append(_bs())
    out = matrix_chain_oracle(chain, [1, 0])
    return abs(out[1]) ** 2, abs(out[0]) ** 2


def rto_oracle(phiA: float, phiB: float) -> dict:
    """Joint detector probabilities for the pair, built from a 4x4 chain.

    Basis order |A path, B path> with solid = 0, dashed = 1. A's shifter is on
    its solid arm, B's on its dashed arm. A1 = A port 1, B1 = B port 0.
    """
    source = [R, 0, 0, R]
    phases = kron(_phase(phiA, 0.0), _phase(0.0, phiB))
    splitters = kron(_bs(), _bs())
    out = matrix_chain_oracle([phases, splitters], source)
    p = [abs(z) ** 2 for z in out]
    port = lambda a, b: p[2 * a + b]
    joint = {
        ("A1", "B1"): port(1, 0), ("A1", "B2"): port(1, 1),
        ("A2", "B1"): port(0, 0), ("A2", "B2"): port(0, 1),
    }
    joint["same"] = joint[("A1", "B1")] + joint[("A2", "B2")]
    joint["correlation"] = 2 * joint["same"] - 1
    return joint


def lhv_enumeration_oracle() -> tuple[float, int]:
    """(max |S|, number of strategies) over deterministic local strategies.

    Strategy ``n`` in 0..15 is read bit by bit as the four +-1 answers.
    """
    best = 0
    count = 0
    for n in range(16):
        bits = [(n >> i) & 1 for i in range(4)]
        x, x2, y, y2 = [1 - 2 * bit for bit in bits]
        s = x * y + x2 * y + x2 * y2 - x * y2
        best = max(best, abs(s))
        count += 1
    return float(best), count


def huygens_integral_oracle(x, slits: int, separation: float, width: float, wavelength: float,
                            distance: float, points_per_slit: int = 400, exact_distance: bool = False):
    """Screen intensity from summing point sources spread across each aperture.

    Sources sit at midpoints of ``points_per_slit`` equal sub-intervals of
    each slit. By default each source's phase is k * s * x / L (the far-field
    path difference); with ``exact_distance`` it uses the true source-to-screen
    distance instead. The result is normalized to unit trapezoid integral.
    """
    if points_per_slit < 200:
        raise ValueError("use at least 200 sample points per slit")
    x = np.asarray(x, dtype=float)
    k = 2 * math.pi / wavelength
    centers = [0.0] if slits == 1 else [-separation / 2, separation / 2]
    step = width / points_per_slit
    sources = []
    for c in centers:
        for i in range(points_per_slit):
            sources.append(c - width / 2 + (i + 0.5) * step)
    s = np.array(sources)[None, :]
    if exact_distance:
        path = np.sqrt(distance ** 2 + (x[:, None] - s) ** 2)
    else:
        path = -s * x[:, None] / distance
    field = np.exp(1j * k * path).sum(axis=1)
    intensity = np.abs(field) ** 2
    area = float(np.sum((intensity[1:] + intensity[:-1]) * np.diff(x)) / 2)
    return intensity / area
