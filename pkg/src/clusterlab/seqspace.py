"""Finite-support sequences modulo shifts.

A :class:`Cluster` is a two-sided real sequence with finitely many nonzero
coordinates. Two clusters that differ only by an index shift are the same
element, so equality, hashing and the metrics below ignore the offset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class DomainError(ValueError):
    """Raised when an operation receives an element outside its domain."""


def _trim(values: np.ndarray) -> tuple[np.ndarray, int]:
    nz = np.flatnonzero(values)
    if nz.size == 0:
        return np.empty(0), 0
    return values[nz[0]:nz[-1] + 1], int(nz[0])


@dataclass(frozen=True, eq=False)
class Cluster:
    """Shift-equivalence class of a finite-support sequence.

    ``values`` is stored trimmed of leading and trailing zeros and
    ``offset`` is the index of ``values[0]`` in the representative the
    cluster was built from. The offset is bookkeeping only.
    """

    values: np.ndarray
    offset: int = 0
    _key: bytes = field(init=False, repr=False)

    def __init__(self, values=(), offset: int = 0):
        arr = np.asarray(values, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise DomainError("cluster coordinates must be finite")
        arr, lead = _trim(arr)
        arr = arr.copy()
        arr.setflags(write=False)
        # -0.0 and 0.0 must hash alike
        key = (arr + 0.0).tobytes()
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "offset", int(offset) + lead if arr.size else 0)
        object.__setattr__(self, "_key", key)

    @classmethod
    def zero(cls) -> "Cluster":
        return cls(())

    def __eq__(self, other):
        if not isinstance(other, Cluster):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"Cluster({self.values.tolist()}, offset={self.offset})"

    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def shift(self, k: int) -> "Cluster":
        return Cluster(self.values, self.offset + k)

    def scale(self, c: float) -> "Cluster":
        return Cluster(c * self.values, self.offset)

    def padded(self, width: int) -> np.ndarray:
        """Values left-aligned in a zero row of length ``width``."""
        if width < self.values.size:
            raise ValueError("width smaller than the cluster support")
        out = np.zeros(width)
        out[:self.values.size] = self.values
        return out

    def to_json(self) -> str:
        return json.dumps(self.values.tolist())

    @classmethod
    def from_json(cls, text: str) -> "Cluster":
        return cls(json.loads(text))


def as_cluster(x) -> Cluster:
    return x if isinstance(x, Cluster) else Cluster(x)


def stack_clusters(clusters, width: int | None = None) -> np.ndarray:
    """Left-aligned zero-padded matrix with one cluster per row."""
    clusters = [as_cluster(c) for c in clusters]
    if width is None:
        width = max((len(c) for c in clusters), default=0)
    out = np.zeros((len(clusters), max(width, 1)))
    for i, c in enumerate(clusters):
        out[i, :len(c)] = c.values
    return out


def _shift_profile(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sup distance between ``a`` and every relative placement of ``b``.

    ``b`` slides across a frame holding ``a`` with ``len(b)`` zeros on each
    side; the first and last placements have disjoint supports.
    """
    la, lb = a.size, b.size
    frame = np.concatenate([np.zeros(lb), a, np.zeros(lb)])
    absf = np.abs(frame)
    # max of |frame| strictly left of / right of each window
    left = np.concatenate([[0.0], np.maximum.accumulate(absf)])[:la + lb + 1]
    right = np.concatenate([np.maximum.accumulate(absf[::-1])[::-1], [0.0]])[lb:]
    windows = sliding_window_view(frame, lb)
    inside = np.max(np.abs(windows - b), axis=1)
    return np.maximum(inside, np.maximum(left, right))


def shift_metric(a, b) -> float:
    """Exact ``inf_k sup_i |a_i - b_{i-k}|`` over all relative shifts."""
    a, b = as_cluster(a), as_cluster(b)
    if a.is_zero or b.is_zero:
        return max(a.sup_norm(), b.sup_norm())
    # the shorter sequence slides, so the work is O((La + Lb) * min(La, Lb))
    x, y = (a.values, b.values) if a.values.size >= b.values.size else (b.values, a.values)
    return float(np.min(_shift_profile(x, y)))


def boundedness_metric(a, b) -> float:
    """``(d(a, b) ^ 1) v |1/|a| - 1/|b||`` on nonzero clusters."""
    a, b = as_cluster(a), as_cluster(b)
    if a.is_zero or b.is_zero:
        raise DomainError("the boundedness metric excludes the zero cluster")
    return max(min(shift_metric(a, b), 1.0), abs(1.0 / a.sup_norm() - 1.0 / b.sup_norm()))


def truncate(a, zeta: float) -> Cluster:
    """Zero out coordinates with modulus at most ``zeta``."""
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    a = as_cluster(a)
    v = np.where(np.abs(a.values) > zeta, a.values, 0.0)
    return Cluster(v, a.offset)


def polar(a) -> tuple[float, Cluster]:
    """Split a nonzero cluster into its sup-norm and unit-norm shape."""
    a = as_cluster(a)
    if a.is_zero:
        raise DomainError("polar decomposition of the zero cluster")
    r = a.sup_norm()
    return r, Cluster(a.values / r, a.offset)
