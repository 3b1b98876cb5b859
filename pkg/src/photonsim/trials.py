"""Seeded, order-independent trial sampling and the records it produces.

Randomness comes from the counter-based Philox generator. A run is identified
by ``(seed, stream)``; the uniform variate for trial ``i`` is the ``i``-th raw
64-bit output of that stream, so any slice of trials can be generated on its
own (in any order, in any worker) and still be bit-identical to a serial run.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .qcore import QuantumError

U64_MAX = 2**64 - 1
_LANES = 4  # Philox4x64 yields four words per counter step
# Outcome probabilities below this are float noise from amplitude cancellation.
PROB_FLOOR = 1e-15


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise QuantumError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream_key(seed: int, stream: str) -> np.ndarray:
    seq = np.random.SeedSequence([check_seed(seed), zlib.crc32(stream.encode("utf-8"))])
    return seq.generate_state(2, np.uint64)


def uniforms(seed: int, stream: str, count: int, start: int = 0) -> np.ndarray:
    """Uniform [0, 1) variates for trials ``start .. start + count - 1``."""
    if count < 0 or start < 0:
        raise QuantumError("count and start must be non-negative")
    block, offset = divmod(start, _LANES)
    counter = np.array([block, 0, 0, 0], dtype=np.uint64)
    gen = np.random.Philox(key=stream_key(seed, stream), counter=counter)
    raw = gen.random_raw(offset + count)[offset:]
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


def sample_categorical(probs: Sequence[float], u: np.ndarray) -> np.ndarray:
    """Map uniforms to outcome indices by inverting the cumulative distribution."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < -PROB_FLOOR) or not np.all(np.isfinite(p)):
        raise QuantumError(f"invalid probability vector {p}")
    p = np.where(p < PROB_FLOOR, 0.0, p)
    total = p.sum()
    if total <= 0:
        raise QuantumError("probability vector has no mass")
    cdf = np.cumsum(p / total)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="right")


@dataclass(frozen=True)
class TrialRecord:
    index: int
    outcomes: tuple[str, ...]
    setting: Optional[str] = None
    recorded: bool = True


@dataclass(frozen=True, eq=False)
class TrialSet:
    """Columnar store of sampled trials.

    ``outcomes[i, s]`` is the label index recorded on side ``s`` in trial
    ``i``; ``settings[i]`` indexes ``setting_names`` when the run switched
    between settings.
    """

    sides: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]
    outcomes: np.ndarray
    settings: Optional[np.ndarray] = None
    setting_names: tuple[str, ...] = ()
    start: int = 0
    indices: Optional[np.ndarray] = None

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.int64)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape[1] != len(self.sides) or len(self.labels) != len(self.sides):
            raise QuantumError("outcome columns must match the declared sides")
        for s, labs in enumerate(self.labels):
            if out.size and (out[:, s].min() < 0 or out[:, s].max() >= len(labs)):
                raise QuantumError(f"outcome index outside label set for side {self.sides[s]!r}")
        out.setflags(write=False)
        object.__setattr__(self, "outcomes", out)
        if self.settings is not None:
            st = np.asarray(self.settings, dtype=np.int64)
            st.setflags(write=False)
            object.__setattr__(self, "settings", st)
        if self.indices is None:
            idx = np.arange(self.start, self.start + out.shape[0], dtype=np.int64)
        else:
            idx = np.asarray(self.indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.outcomes.shape[0]

    def record(self, i: int) -> TrialRecord:
        outs = tuple(self.labels[s][k] for s, k in enumerate(self.outcomes[i]))
        setting = self.setting_names[self.settings[i]] if self.settings is not None else None
        return TrialRecord(int(self.indices[i]), outs, setting)

    def __iter__(self) -> Iterator[TrialRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def side(self, name: str) -> np.ndarray:
        return self.outcomes[:, self.sides.index(name)]

    def side_labels(self, name: str) -> np.ndarray:
        s = self.sides.index(name)
        return np.asarray(self.labels[s])[self.outcomes[:, s]]

    def counts(self, side: Optional[str] = None) -> dict[str, int]:
        s = 0 if side is None else self.sides.index(side)
        c = np.bincount(self.outcomes[:, s], minlength=len(self.labels[s]))
        return dict(zip(self.labels[s], c.tolist()))

    def subset(self, mask: np.ndarray) -> "TrialSet":
        mask = np.asarray(mask, dtype=bool)
        settings = self.settings[mask] if self.settings is not None else None
        return TrialSet(self.sides, self.labels, self.outcomes[mask], settings, self.setting_names,
                        indices=self.indices[mask])

    def to_records(self) -> list[dict]:
        rows = []
        for rec in self:
            row = {"index": rec.index}
            if rec.setting is not None:
                row["setting"] = rec.setting
            row["outcomes"] = dict(zip(self.sides, rec.outcomes))
            row["recorded"] = rec.recorded
            rows.append(row)
        return rows
