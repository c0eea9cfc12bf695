"""Record counts in clusters and series, and the compound Poisson record limit.

Records are strict: ``x_j`` is a record above ``y`` when it exceeds both
``y`` and every earlier coordinate. In the limit, record times form a
Poisson process with intensity ``dx/x`` and each atom carries an i.i.d.
multiplicity ``kappa = R^Q(1/s)`` with ``s`` Pareto(alpha).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ._util import replicate, seed_streams
from .clusters import ClusterPP
from .limitpp import LimitPointProcess, QSampler
from .models import LinearModel, Model, ParameterError, RegVarLaw, SeriesSample, simulate
from .seqspace import DomainError, as_cluster


@dataclass(frozen=True, eq=False)
class RecordMeasure:
    """Atoms ``(time, multiplicity)`` with increasing times and multiplicities >= 1."""

    times: np.ndarray
    mult: np.ndarray

    def __init__(self, times=(), mult=()):
        t = np.asarray(times, dtype=float).ravel()
        m = np.asarray(mult, dtype=int).ravel()
        if t.size != m.size:
            raise ParameterError("times and multiplicities must align")
        if t.size and (t[0] <= 0 or np.any(np.diff(t) <= 0)):
            raise ParameterError("record times must be positive and strictly increasing")
        if np.any(m < 1):
            raise ParameterError("multiplicities must be positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "mult", m)

    def __len__(self):
        return self.times.size

    @property
    def atoms(self) -> list[tuple[float, int]]:
        return [(float(t), int(m)) for t, m in zip(self.times, self.mult)]

    def total(self) -> int:
        return int(self.mult.sum())

    def restrict(self, s: float, T: float) -> "RecordMeasure":
        """Atoms with ``s < t <= T``."""
        keep = (self.times > s) & (self.times <= T)
        return RecordMeasure(self.times[keep], self.mult[keep])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "multiplicity"])
        w.writerows([repr(float(t)), int(m)] for t, m in zip(self.times, self.mult))
        return buf.getvalue()


def cluster_records_batch(rows: np.ndarray, y) -> np.ndarray:
    """Record counts of each row above its threshold ``y`` (scalar or per row)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.broadcast_to(np.asarray(y, dtype=float), (rows.shape[0],))
    prior = np.concatenate([y[:, None], rows[:, :-1]], axis=1)
    running = np.maximum.accumulate(prior, axis=1)
    return np.sum(rows > running, axis=1)


def cluster_records(x, y: float) -> int:
    """Number of coordinates exceeding ``y`` and every earlier coordinate."""
    if y < 0:
        raise ParameterError("threshold must be nonnegative")
    c = as_cluster(x)
    if c.is_zero:
        return 0
    return int(cluster_records_batch(c.values[None, :], y)[0])


def series_record_times(sample) -> np.ndarray:
    """One-based indices ``i`` with ``X_i > max_{j<i} X_j`` (the first is always a record)."""
    x = sample.values if isinstance(sample, SeriesSample) else np.asarray(sample, dtype=float)
    if x.size == 0:
        return np.zeros(0, dtype=int)
    prev = np.concatenate([[-np.inf], np.maximum.accumulate(x)[:-1]])
    return np.flatnonzero(x > prev) + 1


def record_pp_from_clusters(pp) -> RecordMeasure:
    """Record measure of a cluster process, thresholds chained through earlier sup-norms."""
    if isinstance(pp, LimitPointProcess):
        times, rows = pp.T, pp.atoms
    elif isinstance(pp, ClusterPP):
        times = pp.times
        width = max((len(c) for _, c in pp.points), default=1)
        rows = np.zeros((len(pp.points), max(width, 1)))
        for i, (_, c) in enumerate(pp.points):
            rows[i, :len(c)] = c.values
    else:
        pts = list(pp)
        times = np.array([t for t, _ in pts], dtype=float)
        clusters = [as_cluster(c) for _, c in pts]
        width = max((len(c) for c in clusters), default=1)
        rows = np.zeros((len(clusters), max(width, 1)))
        for i, c in enumerate(clusters):
            rows[i, :len(c)] = c.values
    if len(times) == 0:
        return RecordMeasure()
    if np.any(rows < 0):
        raise DomainError("record counts need nonnegative cluster coordinates")
    order = np.argsort(times, kind="stable")
    times, rows = np.asarray(times)[order], rows[order]
    if np.any(np.diff(times) == 0):
        raise ParameterError("cluster times must be distinct")
    norms = rows.max(axis=1)
    thresholds = np.concatenate([[0.0], np.maximum.accumulate(norms)[:-1]])
    k = cluster_records_batch(rows, thresholds)
    keep = k > 0
    return RecordMeasure(times[keep], k[keep])


def _pareto_thresholds(alpha: float, size: int, rng) -> np.ndarray:
    """``1/s`` for ``s`` Pareto(alpha) on ``[1, inf)``, i.e. ``U^(1/alpha)``."""
    return (1.0 - rng.random(size)) ** (1.0 / alpha)


def simulate_limit_records(alpha: float, q: QSampler, window: tuple[float, float], seed=None) -> RecordMeasure:
    """Compound Poisson record measure on ``(s, T]``.

    Atom count is Poisson(``log(T/s)``), times ``s (T/s)^U`` and
    multiplicities ``R^Q(1/s)`` with fresh shapes and Pareto levels.
    """
    s, T = map(float, window)
    if not s > 0:
        raise ParameterError("the window must start above 0: the intensity dx/x is infinite at 0")
    if not T > s:
        raise ParameterError("need s < T")
    rng = np.random.default_rng(seed)
    n = rng.poisson(np.log(T / s))
    times = np.sort(s * (T / s) ** rng.random(n))
    if n == 0:
        return RecordMeasure()
    Q = q.sample(n, rng)
    if np.any(Q < 0):
        raise DomainError("record multiplicities need nonnegative shapes")
    kappa = cluster_records_batch(Q, _pareto_thresholds(alpha, n, rng))
    keep = kappa > 0
    return RecordMeasure(times[keep], kappa[keep])


def ladder_values(row) -> np.ndarray:
    """Strictly increasing running-maximum values of a nonnegative row."""
    row = np.asarray(row, dtype=float)
    prev = np.concatenate([[0.0], np.maximum.accumulate(row)[:-1]])
    return row[row > prev]


def kappa_law(alpha: float, q: QSampler, mc_samples: int = 200000, seed=None) -> dict[int, float]:
    """Law of ``kappa = R^Q(1/s)``.

    For finite-support samplers this is exact: ``kappa`` counts the ladder
    values of ``Q`` above ``1/s`` and ``P(1/s < v) = v^alpha``.
    """
    sup = q.support()
    law: dict[int, float] = {}
    if sup is not None:
        for w, row in zip(*sup):
            if np.any(row < 0):
                raise DomainError("record multiplicities need nonnegative shapes")
            lad = ladder_values(row)[::-1]  # largest first
            # P(kappa >= k) = lad[k-1]^alpha
            tail = np.concatenate([lad ** alpha, [0.0]])
            for k in range(1, lad.size + 1):
                law[k] = law.get(k, 0.0) + w * (tail[k - 1] - tail[k])
        return {k: v for k, v in sorted(law.items()) if v > 0}
    rng = np.random.default_rng(seed)
    Q = q.sample(int(mc_samples), rng)
    kap = cluster_records_batch(Q, _pareto_thresholds(alpha, Q.shape[0], rng))
    vals, cnt = np.unique(kap, return_counts=True)
    return {int(v): float(c / kap.size) for v, c in zip(vals, cnt)}


def ma1_kappa_law(c: float, alpha: float) -> dict[int, float]:
    """Multiplicity law for the MA(1) shape ``(1/c, 1)``, ``c > 1``."""
    if not c > 1:
        raise DomainError("the two-point law needs c > 1")
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    p2 = float(c ** -alpha)
    law = {1: 1.0 - p2, 2: p2}
    return {k: v for k, v in law.items() if v > 0}


def block_records(sample, r_n: int) -> RecordMeasure:
    """Series records merged per block: atom at ``(b+1)/k_n`` with the block's record count."""
    idx = series_record_times(sample)
    n = len(sample.values if isinstance(sample, SeriesSample) else sample)
    k = n // r_n
    b = (idx - 1) // r_n
    b = b[b < k]
    blocks, counts = np.unique(b, return_counts=True)
    return RecordMeasure((blocks + 1) / k, counts)


def poisson_chisquare(counts: np.ndarray, mean: float, min_expected: float = 5.0) -> dict:
    """Chi-square goodness of fit of integer counts to Poisson(``mean``)."""
    counts = np.asarray(counts, dtype=int)
    N = counts.size
    pmf = stats.poisson.pmf(np.arange(counts.max() + 2), mean)
    # merge the upper tail until every bin has enough expected mass
    kmax = 0
    while kmax + 1 < pmf.size and N * stats.poisson.sf(kmax, mean) >= min_expected:
        kmax += 1
    exp = np.append(N * pmf[:kmax], N * stats.poisson.sf(kmax - 1, mean))
    obs = np.append(np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)[:kmax],
                    np.sum(counts >= kmax))
    res = stats.chisquare(obs, exp)
    return {"statistic": float(res.statistic), "pvalue": float(res.pvalue), "bins": int(exp.size)}


def record_convergence_experiment(model: Model, n_grid: Sequence[int], window: tuple[float, float],
                                  replications: int, seed=None, r_n: int | None = None,
                                  threads: int | None = 1, min_p: float = 0.01) -> dict:
    """Block-merged record atoms of simulated series against the compound Poisson limit.

    For each ``n`` the atom counts in ``(s, T]`` are tested against
    Poisson(``log(T/s)``) and the multiplicity frequencies against the limit
    law of ``kappa`` (3 standard errors per multiplicity value).
    """
    s, T = map(float, window)
    if not s < T:
        return {"rows": [], "passed": True}
    if isinstance(model, LinearModel):
        if model.p != 1.0 or np.any(model.c < 0):
            raise DomainError("records need a nonnegative model")
        from .sums import limit_inputs
        _, q = limit_inputs(model)
        c = model.c
        nz = c[c != 0]
        if np.unique(nz).size < nz.size:
            import warnings
            warnings.warn("repeated coefficients: cluster values tie", RuntimeWarning, stacklevel=2)
    elif isinstance(model, RegVarLaw):
        if model.p != 1.0:
            raise DomainError("records need a nonnegative model")
        from .limitpp import PointQ
        q = PointQ(1.0)
    else:
        raise ParameterError("record experiment supports Pareto and linear models")
    law = kappa_law(model.alpha, q)
    rows = []
    for n, ss in zip(n_grid, seed_streams(seed, len(n_grid))):
        rn = r_n or max(1, int(np.sqrt(n)))

        def one(st, n=n, rn=rn):
            rm = block_records(simulate(model, n, st), rn).restrict(s, T)
            return rm.mult

        mults = replicate(one, ss, replications, threads)
        counts = np.array([m.size for m in mults])
        allm = np.concatenate(mults) if mults else np.zeros(0, int)
        chi = poisson_chisquare(counts, np.log(T / s))
        freq = {}
        ok_mult = True
        for k, pk in law.items():
            f = float(np.mean(allm == k)) if allm.size else 0.0
            # the empirical variance keeps the test usable when the limit law is degenerate
            se = np.sqrt(max(pk * (1 - pk), f * (1 - f)) / max(allm.size, 1))
            z = (f - pk) / se if se > 0 else (0.0 if f == pk else np.inf)
            freq[str(k)] = {"empirical": f, "limit": pk, "se": float(se), "z": float(z)}
            ok_mult &= abs(z) <= 3
        other = float(np.mean(~np.isin(allm, list(law)))) if allm.size else 0.0
        rows.append({"n": int(n), "r_n": int(rn), "replications": int(replications),
                     "atoms": int(allm.size), "mean_count": float(counts.mean()),
                     "count_chisq": chi, "multiplicity": freq, "other_multiplicity": other,
                     "passed": bool(chi["pvalue"] > min_p and ok_mult)})
    return {"model": model.to_dict(), "window": [s, T], "kappa_law": {str(k): v for k, v in law.items()},
            "rows": rows, "passed": all(r["passed"] for r in rows)}
