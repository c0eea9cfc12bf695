"""Functionals on clusters, evaluated row-wise on padded block matrices.

A functional that vanishes whenever the cluster's sup-norm is at most
``floor`` only needs to be evaluated on the rare blocks above the floor,
which is what makes block statistics over long series cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .seqspace import Cluster, stack_clusters


@dataclass(frozen=True)
class ClusterFunctional:
    """Row-wise functional ``f`` on clusters.

    ``fn`` maps an ``(m, width)`` array of clusters to ``m`` values.
    ``floor`` is a sup-norm level at or below which ``f`` is zero (``None``
    if no such level is known). ``analytic_nu``, when given, returns the
    exact limit ``theta * int E f(yQ) alpha y^(-alpha-1) dy`` as a function
    of ``(theta, alpha)`` valid for every law of the shape ``Q``.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    floor: float | None = None
    bound: float | None = None
    nonnegative: bool = True
    analytic_nu: Callable[[float, float], float] | None = None

    def rows(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] == 0:
            return np.zeros(0)
        return np.asarray(self.fn(x), dtype=float)

    def __call__(self, x):
        if isinstance(x, Cluster):
            return float(self.rows(x.values if len(x) else np.zeros(1))[0])
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            return float(self.rows(arr if arr.size else np.zeros(1))[0])
        return self.rows(arr)

    def on_clusters(self, clusters) -> np.ndarray:
        return self.rows(stack_clusters(clusters))

    def sparse(self, blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices and values of the rows where ``f`` may be nonzero."""
        if self.floor is None:
            idx = np.arange(blocks.shape[0])
        else:
            idx = np.flatnonzero(np.max(np.abs(blocks), axis=1) > self.floor)
        vals = self.rows(blocks[idx]) if idx.size else np.zeros(0)
        return idx, vals

    def scaled(self, c: float, name: str | None = None) -> "ClusterFunctional":
        nu = self.analytic_nu
        return ClusterFunctional(
            name or f"{c:g}*{self.name}",
            lambda x: c * self.fn(x),
            self.floor,
            None if self.bound is None else abs(c) * self.bound,
            self.nonnegative and c >= 0,
            None if nu is None else (lambda th, a: c * nu(th, a)),
        )


def _sup(x):
    return np.max(np.abs(x), axis=1)


def sup_exceeds(y: float) -> ClusterFunctional:
    """``1{sup|x| > y}``; its limit is ``theta * y**-alpha``."""
    return ClusterFunctional(
        f"1{{sup>{y:g}}}", lambda x: (_sup(x) > y).astype(float),
        floor=y, bound=1.0, analytic_nu=lambda th, a: th * y ** -a)


def capped_abs_sum(cap: float, y: float) -> ClusterFunctional:
    """``min(sum|x_j|, cap) * 1{sup|x| > y}``."""
    return ClusterFunctional(
        f"min(sum|x|,{cap:g})*1{{sup>{y:g}}}",
        lambda x: np.minimum(np.sum(np.abs(x), axis=1), cap) * (_sup(x) > y),
        floor=y, bound=cap)


def sup_above(y: float) -> ClusterFunctional:
    """``sup|x| * 1{sup|x| > y}`` (unbounded; finite limit needs alpha > 1)."""
    def nu(th, a):
        return th * a / (a - 1.0) * y ** (1.0 - a) if a > 1 else np.inf
    return ClusterFunctional(
        f"sup*1{{sup>{y:g}}}", lambda x: _sup(x) * (_sup(x) > y), floor=y, analytic_nu=nu)


def exceedance_count(y: float) -> ClusterFunctional:
    """Number of coordinates with ``|x_j| > y``."""
    return ClusterFunctional(
        f"#{{|x|>{y:g}}}", lambda x: np.sum(np.abs(x) > y, axis=1).astype(float), floor=y)


def sign_of_sum() -> ClusterFunctional:
    """``sign(sum_j x_j)``, a bounded statistic of the cluster shape."""
    return ClusterFunctional("sign(sum)", lambda x: np.sign(np.sum(x, axis=1)),
                             bound=1.0, nonnegative=False)


def second_largest_ratio() -> ClusterFunctional:
    """Second largest ``|x_j|`` divided by the largest."""
    def fn(x):
        a = np.abs(x)
        if a.shape[1] < 2:
            return np.zeros(a.shape[0])
        top2 = -np.partition(-a, 1, axis=1)[:, :2]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = top2[:, 1] / top2[:, 0]
        return np.nan_to_num(r)
    return ClusterFunctional("second/first", fn, bound=1.0)


def zero_functional() -> ClusterFunctional:
    return ClusterFunctional("0", lambda x: np.zeros(x.shape[0]), floor=1.0, bound=0.0,
                             analytic_nu=lambda th, a: 0.0)
