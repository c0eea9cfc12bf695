"""Small shared helpers: estimates with standard errors, seed streams, replication."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo value with its standard error."""

    value: float
    se: float = 0.0

    def __float__(self):
        return float(self.value)

    def z(self, target: float, other_se: float = 0.0) -> float:
        s = float(np.hypot(self.se, other_se))
        diff = self.value - target
        if s == 0.0:
            return 0.0 if diff == 0.0 else float(np.copysign(np.inf, diff))
        return float(diff / s)


@dataclass
class Diagnostic:
    """Named estimate with blocking metadata, serialisable as a JSON record."""

    name: str
    estimate: float
    se: float
    n: int
    r_n: int
    u: float
    warning: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __float__(self):
        return float(self.estimate)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["warning"] is None:
            del d["warning"]
        if not d["extra"]:
            del d["extra"]
        return d


def as_seedseq(seed) -> np.random.SeedSequence:
    """``seed`` (int, None or SeedSequence) as a SeedSequence."""
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def seed_streams(seed, count: int) -> list[np.random.SeedSequence]:
    """``count`` independent child seed sequences of ``seed``."""
    return as_seedseq(seed).spawn(count)


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def replicate(fn: Callable[[np.random.SeedSequence], Any], seed, count: int, threads: int | None = 1) -> list:
    """Run ``fn`` on ``count`` independent seed streams, in order.

    Results do not depend on ``threads``: each replication owns its stream.
    """
    streams = seed_streams(seed, count)
    threads = threads or default_threads()
    if threads <= 1 or count <= 1:
        return [fn(s) for s in streams]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, streams))


def mean_se(x: Sequence[float]) -> Estimate:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return Estimate(float("nan"), float("nan"))
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("inf")
    return Estimate(float(np.mean(x)), se)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and dataclasses for ``json.dump``."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj
