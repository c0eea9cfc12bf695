"""Empirical cluster statistics from blocks of a long series.

The series is cut into ``k_n = n // r_n`` blocks of length ``r_n``; block
``i`` scaled by ``a_n`` is placed at time ``i / k_n``. From the blocks we
estimate the extremal index, the joint law of a block's sup-norm and its
normalised shape, and the cluster functionals ``k_n E f(X_{n,1})``.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from ._util import Diagnostic, replicate, seed_streams
from .functionals import ClusterFunctional
from .models import DiagnosticError, Model, ParameterError, SeriesSample, quantile_an, simulate
from .seqspace import Cluster


@dataclass(frozen=True)
class BlockingPlan:
    """Block length ``r_n``, scaling ``a_n`` and threshold multiplier ``u``."""

    n: int
    r_n: int
    a_n: float
    u: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be positive")
        if not 1 <= self.r_n <= self.n:
            raise ParameterError(f"need 1 <= r_n <= n, got r_n={self.r_n}, n={self.n}")
        if not self.a_n > 0:
            raise ParameterError("a_n must be positive")
        if not self.u > 0:
            raise ParameterError("u must be positive")

    @property
    def k_n(self) -> int:
        return self.n // self.r_n

    @property
    def threshold(self) -> float:
        return self.a_n * self.u

    @classmethod
    def for_model(cls, model: Model, n: int, r_n: int | None = None, u: float = 1.0,
                  sample: SeriesSample | None = None) -> "BlockingPlan":
        """Plan with ``a_n`` from the model; ``r_n`` defaults to ``floor(sqrt(n))``."""
        r_n = r_n or max(1, int(np.sqrt(n)))
        return cls(n, r_n, quantile_an(model, n, sample=sample), u)

    def to_dict(self) -> dict:
        return {"n": self.n, "r_n": self.r_n, "k_n": self.k_n, "a_n": self.a_n, "u": self.u}


@dataclass(frozen=True)
class ClusterPP:
    """Nonzero scaled blocks with their times ``i / k_n``."""

    points: tuple[tuple[float, Cluster], ...]
    plan: BlockingPlan

    def __len__(self):
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.points])


def _values(sample) -> np.ndarray:
    return sample.values if isinstance(sample, SeriesSample) else np.asarray(sample, dtype=float)


def _as_list(samples) -> list:
    if isinstance(samples, SeriesSample) or (isinstance(samples, np.ndarray) and samples.ndim == 1):
        return [samples]
    return list(samples)


def _iter_samples(samples):
    if isinstance(samples, SeriesSample) or (isinstance(samples, np.ndarray) and samples.ndim == 1):
        return iter([samples])
    return iter(samples)


def block_matrix(sample, plan: BlockingPlan) -> np.ndarray:
    """``(k_n, r_n)`` array of scaled blocks; the trailing partial block is dropped."""
    x = _values(sample)
    if x.size < plan.r_n:
        raise ParameterError(f"series of length {x.size} is shorter than r_n={plan.r_n}")
    k = x.size // plan.r_n
    return x[:k * plan.r_n].reshape(k, plan.r_n) / plan.a_n


def block_series(sample, plan: BlockingPlan) -> ClusterPP:
    """Point process of nonzero scaled blocks at times ``i / k_n``."""
    blocks = block_matrix(sample, plan)
    k = blocks.shape[0]
    nz = np.flatnonzero(np.any(blocks != 0, axis=1))
    points = tuple(((i + 1) / k, Cluster(blocks[i], i * plan.r_n)) for i in nz)
    return ClusterPP(points, plan)


def empirical_theta(samples, plan: BlockingPlan, min_blocks: int = 30) -> Diagnostic:
    """Ratio of block-maximum exceedances to ``r_n`` times marginal exceedances.

    Several series may be passed to pool their blocks. Both frequencies
    are taken over the ``k_n * r_n`` blocked observations; the standard
    error is the delta-method error of the ratio of block totals.
    """
    thr = plan.threshold
    hits, counts = [], []
    for s in _as_list(samples):
        b = np.abs(block_matrix(s, plan)) > plan.u
        hits.append(b.any(axis=1))
        counts.append(b.sum(axis=1))
    hit = np.concatenate(hits).astype(float)
    cnt = np.concatenate(counts).astype(float)
    total = cnt.sum()
    if total == 0:
        raise DiagnosticError(f"no exceedances of a_n*u = {thr:g}")
    est = hit.sum() / total
    se = np.sqrt(np.sum((hit - est * cnt) ** 2)) / total
    warning = None
    if hit.sum() < min_blocks:
        warning = f"only {int(hit.sum())} blocks exceed the threshold (< {min_blocks})"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    return Diagnostic("extremal_index", float(est), float(se), plan.n, plan.r_n, plan.u, warning,
                      {"blocks_exceeding": int(hit.sum()), "exceedances": int(total),
                       "blocks": int(hit.size)})


def anticluster_diagnostic(sample, plan: BlockingPlan, m: int, u: float | None = None,
                           chunk: int = 2048) -> Diagnostic:
    """``P(max_{m<=|k|<=r_n} |X_{i+k}| > a_n u  |  |X_i| > a_n u)`` over anchors."""
    if not 0 < m < plan.r_n:
        raise ParameterError(f"need 0 < m < r_n, got m={m}, r_n={plan.r_n}")
    u = plan.u if u is None else u
    x = np.abs(_values(sample))
    thr = plan.a_n * u
    r = plan.r_n
    idx = np.flatnonzero(x > thr)
    idx = idx[(idx >= r) & (idx < x.size - r)]
    if idx.size == 0:
        raise DiagnosticError(f"no exceedances of a_n*u = {thr:g} with a full window")
    win = sliding_window_view(x, r - m + 1)
    hit = np.empty(idx.size, dtype=bool)
    for lo in range(0, idx.size, chunk):
        j = idx[lo:lo + chunk]
        left = win[j - r].max(axis=1)
        right = win[j + m].max(axis=1)
        hit[lo:lo + chunk] = np.maximum(left, right) > thr
    est = hit.mean()
    se = np.sqrt(est * (1 - est) / idx.size)
    return Diagnostic("anticlustering", float(est), float(se), x.size, r, u,
                      extra={"m": m, "anchors": int(idx.size)})


@dataclass(frozen=True, eq=False)
class ClusterLawSample:
    """Pairs ``(L, Q)`` from blocks whose maximum exceeds ``a_n u``.

    ``shapes`` holds the normalised blocks row-wise (time order, untrimmed);
    iterating yields ``(L, Cluster)`` pairs.
    """

    L: np.ndarray
    shapes: np.ndarray
    plan: BlockingPlan | None = None

    def __len__(self):
        return self.L.size

    def __iter__(self):
        for l, q in zip(self.L, self.shapes):
            yield float(l), Cluster(q)

    def __getitem__(self, i):
        return float(self.L[i]), Cluster(self.shapes[i])

    def pairs(self) -> list[tuple[float, Cluster]]:
        return list(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["L", "Q"])
        for l, q in self:
            w.writerow([repr(l), q.to_json()])
        return buf.getvalue()


def empirical_cluster_law(samples, plan: BlockingPlan) -> ClusterLawSample:
    """``L = M/(a_n u)`` and ``Q = block/M`` for each block with ``M > a_n u``."""
    Ls, Qs = [], []
    for s in _as_list(samples):
        blocks = block_matrix(s, plan)
        amax = np.max(np.abs(blocks), axis=1)
        keep = np.flatnonzero(amax > plan.u)
        Ls.append(amax[keep] / plan.u)
        Qs.append(blocks[keep] / amax[keep, None])
    L = np.concatenate(Ls)
    if L.size == 0:
        raise DiagnosticError("no block maximum exceeds a_n*u")
    return ClusterLawSample(L, np.concatenate(Qs, axis=0), plan)


def _jitter_ties(g: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    levels = np.unique(g)
    if levels.size == g.size:
        return g
    gap = np.min(np.diff(levels)) if levels.size > 1 else 1.0
    # uniform noise inside half a gap keeps distinct levels ordered and
    # breaks ties independently of the group labels
    return g + rng.uniform(0.0, 0.5 * gap, g.size)


def independence_test_LQ(pairs, g: ClusterFunctional | Callable, v: float | None = None,
                         min_pairs: int = 500, seed=0) -> float:
    """Two-sample KS p-value for ``g(Q)`` given ``L > v`` versus ``L <= v``.

    ``v`` defaults to the median of ``L``. Ties in ``g(Q)`` (a discrete
    statistic) are broken by an independent jitter so the test keeps its
    nominal level. A constant statistic returns p = 1.
    """
    if isinstance(pairs, ClusterLawSample):
        L, shapes = pairs.L, pairs.shapes
        gq = g.rows(shapes) if isinstance(g, ClusterFunctional) else np.array([g(Cluster(q)) for q in shapes])
    else:
        pairs = list(pairs)
        L = np.array([p[0] for p in pairs], dtype=float)
        gq = np.array([g(p[1]) for p in pairs], dtype=float)
    if L.size < min_pairs:
        raise ParameterError(f"need at least {min_pairs} pairs, got {L.size}")
    if np.ptp(gq) == 0:
        return 1.0
    v = float(np.median(L)) if v is None else v
    gq = _jitter_ties(gq, np.random.default_rng(seed))
    hi, lo = gq[L > v], gq[L <= v]
    if hi.size == 0 or lo.size == 0:
        raise DiagnosticError("split at v leaves an empty group")
    res = stats.ks_2samp(hi, lo)
    return float(res.pvalue)


def cluster_functional_nu(samples, plan: BlockingPlan, f: ClusterFunctional,
                          epsilon: float | None = None) -> Diagnostic:
    """``k_n * mean_i f(X_{n,i})``, averaged over the given series.

    With one series the standard error treats blocks as independent; with
    several it is the spread across series.
    """
    return cluster_functionals_nu(samples, plan, [f], epsilon)[0]


def cluster_functionals_nu(samples, plan: BlockingPlan, functionals: Sequence[ClusterFunctional],
                           epsilon: float | None = None) -> list[Diagnostic]:
    """:func:`cluster_functional_nu` for several functionals in one pass.

    ``samples`` may be any iterable of series (a generator keeps one series
    in memory at a time).
    """
    eps = [f.floor if epsilon is None else epsilon for f in functionals]
    for f, e in zip(functionals, eps):
        if e is None:
            raise ParameterError(f"functional {f.name!r} needs a support floor")
    per_series = []
    last = None
    for s in _iter_samples(samples):
        blocks = block_matrix(s, plan)
        top = np.max(np.abs(blocks), axis=1)
        row = []
        last = []
        for f, e in zip(functionals, eps):
            idx = np.flatnonzero(top > e)
            vals = np.zeros(blocks.shape[0])
            if idx.size:
                vals[idx] = f.rows(blocks[idx])
            row.append(vals.sum())
            last.append(vals)
        per_series.append(row)
    if not per_series:
        raise ParameterError("no series given")
    per_series = np.array(per_series)
    out = []
    for j, f in enumerate(functionals):
        col = per_series[:, j]
        if col.size > 1:
            est, se = col.mean(), col.std(ddof=1) / np.sqrt(col.size)
        else:
            vals = last[j]
            est = col[0]
            se = np.sqrt(vals.size) * vals.std(ddof=1) if vals.size > 1 else np.inf
        out.append(Diagnostic(f"nu[{f.name}]", float(est), float(se), plan.n, plan.r_n, plan.u,
                              extra={"replications": int(col.size)}))
    return out


def laplace_gap_diagnostic(source, plan: BlockingPlan, f: ClusterFunctional,
                           replications: int, seed=None, time_weight: Callable | None = None,
                           bootstrap: int = 400, threads: int | None = 1) -> Diagnostic:
    """Gap between the Laplace functional of the blocks and its product form.

    ``source`` is a model (simulated with :func:`simulate`) or a callable
    mapping a seed sequence to a series. Block ``i`` of replication ``r``
    contributes ``F = w(i/k_n) f(X_{n,i})``; the first term averages
    ``exp(-sum_i F)`` over replications, the second multiplies the
    per-block averages of ``exp(-F)`` taken across replications (blocks
    from different replications are independent). The standard error comes
    from resampling replications.
    """
    if replications < 2:
        raise ParameterError("need at least two replications")
    if f.floor is None or not f.nonnegative:
        raise ParameterError("f must be nonnegative with a support floor")
    if replications < 50:
        warnings.warn("fewer than 50 replications: Laplace gap is imprecise",
                      RuntimeWarning, stacklevel=2)
    def one(ss):
        x = source(ss) if callable(source) else simulate(source, plan.n, ss)
        blocks = block_matrix(x, plan)
        idx, vals = f.sparse(blocks)
        if time_weight is not None:
            vals = vals * time_weight((idx + 1) / blocks.shape[0])
        return idx, vals

    s_rep, s_boot = seed_streams(seed, 2)
    res = replicate(one, s_rep, replications, threads)
    rep = np.concatenate([np.full(i.size, r) for r, (i, _) in enumerate(res)]).astype(int)
    blk = np.concatenate([i for i, _ in res]).astype(int)
    F = np.concatenate([v for _, v in res])
    G = 1.0 - np.exp(-F)
    R, k = replications, plan.k_n

    def gap(w):
        # w: replication weights summing to R
        term1 = np.sum(w * np.exp(-np.bincount(rep, F, minlength=R))) / R
        colmean = np.bincount(blk, w[rep] * G, minlength=k) / R
        term2 = np.exp(np.sum(np.log1p(-np.minimum(colmean, 1.0 - 1e-300))))
        return term1 - term2, term1, term2

    g0, t1, t2 = gap(np.ones(R))
    rng = np.random.default_rng(s_boot)
    boots = [gap(rng.multinomial(R, np.full(R, 1.0 / R)).astype(float))[0] for _ in range(bootstrap)]
    return Diagnostic("laplace_gap", float(g0), float(np.std(boots, ddof=1)), plan.n, plan.r_n, plan.u,
                      extra={"term1": float(t1), "term2": float(t2), "replications": R})


def replicated_theta(model: Model, plan: BlockingPlan, replications: int, seed=None,
                     threads: int | None = 1, min_blocks: int = 30) -> Diagnostic:
    """:func:`empirical_theta` pooled over independent simulated series.

    Series are simulated and reduced one at a time, so memory stays at one
    path per thread. The standard error is the delta-method error of the
    ratio of per-series totals.
    """
    if replications < 1:
        raise ParameterError("need at least one replication")

    def one(ss):
        b = np.abs(block_matrix(simulate(model, plan.n, ss), plan)) > plan.u
        return int(b.any(axis=1).sum()), int(b.sum())

    res = np.array(replicate(one, seed, replications, threads), dtype=float)
    hit, cnt = res[:, 0], res[:, 1]
    total = cnt.sum()
    if total == 0:
        raise DiagnosticError(f"no exceedances of a_n*u = {plan.threshold:g}")
    est = hit.sum() / total
    se = np.sqrt(np.sum((hit - est * cnt) ** 2)) / total if replications > 1 else np.inf
    warning = None
    if hit.sum() < min_blocks:
        warning = f"only {int(hit.sum())} blocks exceed the threshold (< {min_blocks})"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    return Diagnostic("extremal_index", float(est), float(se), plan.n, plan.r_n, plan.u, warning,
                      {"blocks_exceeding": int(hit.sum()), "exceedances": int(total),
                       "replications": int(replications)})


def replicated_cluster_law(model: Model, plan: BlockingPlan, replications: int, seed=None,
                           threads: int | None = 1) -> ClusterLawSample:
    """:func:`empirical_cluster_law` over independent simulated series, concatenated."""
    def one(ss):
        try:
            c = empirical_cluster_law(simulate(model, plan.n, ss), plan)
        except DiagnosticError:
            return np.zeros(0), np.zeros((0, plan.r_n))
        return c.L, c.shapes

    res = replicate(one, seed, replications, threads)
    L = np.concatenate([r[0] for r in res])
    if L.size == 0:
        raise DiagnosticError("no block maximum exceeds a_n*u")
    return ClusterLawSample(L, np.concatenate([r[1] for r in res], axis=0), plan)
