"""Decorated cadlag paths on [0, 1] and the Hausdorff distance between their graphs.

A :class:`DecoratedPath` is a right-continuous step function, optionally
plus a continuous piecewise-linear drift, together with closed intervals
("decorations") attached to finitely many times. Every jump carries a
decoration containing both one-sided values. Its graph is a finite union of
segments, so the Hausdorff distance under the sup-norm on the plane can be
computed exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .models import ParameterError


def _arr(x) -> np.ndarray:
    a = np.array(x, dtype=float).ravel()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepPath:
    """Right-continuous step function on [0, 1].

    ``values[0]`` is the level on ``[0, times[0])`` and ``values[i+1]`` the
    level from ``times[i]`` on. Jump times lie in ``(0, 1]``.
    """

    times: np.ndarray
    values: np.ndarray

    def __init__(self, times=(), values=(0.0,)):
        t, v = _arr(times), _arr(values)
        if v.size != t.size + 1:
            raise ParameterError("values must have one more entry than times")
        if t.size and (t[0] <= 0 or t[-1] > 1 or np.any(np.diff(t) <= 0)):
            raise ParameterError("jump times must be strictly increasing in (0, 1]")
        if not np.all(np.isfinite(v)):
            raise ParameterError("levels must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c: float = 0.0) -> "StepPath":
        return cls((), (c,))

    @classmethod
    def from_jumps(cls, times, sizes, initial: float = 0.0) -> "StepPath":
        sizes = np.asarray(sizes, dtype=float)
        return cls(times, np.concatenate([[initial], initial + np.cumsum(sizes)]))

    @property
    def initial(self) -> float:
        return float(self.values[0])

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(self.values)

    def __call__(self, t):
        idx = np.searchsorted(self.times, t, side="right")
        return self.values[idx]

    value = __call__

    def left_limit(self, t):
        idx = np.searchsorted(self.times, t, side="left")
        return self.values[idx]

    def __neg__(self):
        return StepPath(self.times, -self.values)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function on [0, 1] through ``(knots, values)``."""

    knots: np.ndarray
    values: np.ndarray

    def __init__(self, knots=(0.0, 1.0), values=(0.0, 0.0)):
        k, v = _arr(knots), _arr(values)
        if k.size != v.size or k.size < 2 or k[0] != 0.0 or k[-1] != 1.0 or np.any(np.diff(k) <= 0):
            raise ParameterError("knots must increase strictly from 0 to 1, one value each")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    @classmethod
    def linear(cls, slope: float, intercept: float = 0.0) -> "PiecewiseLinear":
        return cls((0.0, 1.0), (intercept, intercept + slope))

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)

    def __add__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        k = np.union1d(self.knots, other.knots)
        return PiecewiseLinear(k, self(k) + other(k))

    def __neg__(self):
        return PiecewiseLinear(self.knots, -self.values)

    def sup_distance(self, other: "PiecewiseLinear") -> float:
        k = np.union1d(self.knots, other.knots)
        return float(np.max(np.abs(self(k) - other(k))))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True, eq=False)
class DecoratedPath:
    """Element of E: step part, decorations, optional continuous drift.

    Decorations ``(dec_t, dec_lo, dec_hi)`` are stored relative to the step
    part; the interval attached to ``t`` is ``[lo + b(t), hi + b(t)]`` where
    ``b`` is the drift. Missing decorations at jumps are added as
    ``[min, max]`` of the one-sided values.
    """

    step: StepPath
    dec_t: np.ndarray
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    drift: PiecewiseLinear | None = None

    def __init__(self, step: StepPath, decorations=(), drift: PiecewiseLinear | None = None,
                 relative: bool = True, check: bool = True):
        dec = np.asarray(decorations, dtype=float).reshape(-1, 3)
        if drift is not None and drift.is_zero:
            drift = None
        t, lo, hi = dec[:, 0].copy(), dec[:, 1].copy(), dec[:, 2].copy()
        if not relative and drift is not None:
            b = drift(t)
            lo, hi = lo - b, hi - b
        if t.size:
            if np.any((t < 0) | (t > 1)):
                raise ParameterError("decoration times must lie in [0, 1]")
            if np.any(lo > hi):
                raise ParameterError("decoration intervals need lo <= hi")
            order = np.argsort(t, kind="stable")
            t, lo, hi = t[order], lo[order], hi[order]
            if np.any(np.diff(t) == 0):
                raise ParameterError("decoration times must be distinct")
        # auto-complete jumps that carry no decoration
        jt = step.times[step.jumps != 0]
        missing = jt[~np.isin(jt, t)]
        if missing.size:
            a, b = step.left_limit(missing), step(missing)
            t = np.concatenate([t, missing])
            lo = np.concatenate([lo, np.minimum(a, b)])
            hi = np.concatenate([hi, np.maximum(a, b)])
            order = np.argsort(t, kind="stable")
            t, lo, hi = t[order], lo[order], hi[order]
        if check and t.size:
            a, b = step.left_limit(t), step(t)
            tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
            if np.any(lo > np.minimum(a, b) + tol) or np.any(hi < np.maximum(a, b) - tol):
                raise ParameterError("each decoration must contain x(t-) and x(t)")
        object.__setattr__(self, "step", step)
        object.__setattr__(self, "dec_t", _arr(t))
        object.__setattr__(self, "dec_lo", _arr(lo))
        object.__setattr__(self, "dec_hi", _arr(hi))
        object.__setattr__(self, "drift", drift)

    # evaluation -----------------------------------------------------------

    def _b(self, t):
        return 0.0 if self.drift is None else self.drift(t)

    def __call__(self, t):
        return self.step(t) + self._b(t)

    value = __call__

    def left_limit(self, t):
        return self.step.left_limit(t) + self._b(t)

    def decorations(self) -> np.ndarray:
        """``(m, 3)`` array of absolute ``(t, lo, hi)``."""
        b = self._b(self.dec_t)
        return np.column_stack([self.dec_t, self.dec_lo + b, self.dec_hi + b])

    def interval(self, t):
        """``x'(t)`` as ``(lo, hi)`` arrays: decoration if present, else the value."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        v = self(t)
        lo, hi = v.copy(), v.copy()
        pos = np.searchsorted(self.dec_t, t)
        pos_c = np.minimum(pos, max(self.dec_t.size - 1, 0))
        hit = (pos < self.dec_t.size) & (self.dec_t[pos_c] == t) if self.dec_t.size else np.zeros(t.size, bool)
        if np.any(hit):
            b = self._b(t[hit])
            lo[hit] = self.dec_lo[pos_c[hit]] + b
            hi[hit] = self.dec_hi[pos_c[hit]] + b
        return lo, hi

    def breakpoints(self) -> np.ndarray:
        """Jump times, decoration times, drift knots and the endpoints 0, 1."""
        parts = [np.array([0.0, 1.0]), self.step.times, self.dec_t]
        if self.drift is not None:
            parts.append(self.drift.knots)
        return np.unique(np.concatenate(parts))

    def __neg__(self):
        return DecoratedPath(-self.step, np.column_stack([self.dec_t, -self.dec_hi, -self.dec_lo]),
                             None if self.drift is None else -self.drift)

    # serialisation --------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "initial": float(self(0.0)),
            "jumps": [[float(t), float(v)] for t, v in zip(self.step.times, self.step.values[1:])],
            "decorations": [[float(t), float(lo), float(hi)] for t, lo, hi in self.decorations()],
        }
        if self.drift is not None:
            d["drift"] = [[float(k), float(v)] for k, v in zip(self.drift.knots, self.drift.values)]
            d["initial"] = float(self.step.values[0])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DecoratedPath":
        jumps = np.asarray(d.get("jumps", []), dtype=float).reshape(-1, 2)
        step = StepPath(jumps[:, 0], np.concatenate([[d.get("initial", 0.0)], jumps[:, 1]]))
        drift = None
        if d.get("drift"):
            k = np.asarray(d["drift"], dtype=float)
            drift = PiecewiseLinear(k[:, 0], k[:, 1])
        return cls(step, d.get("decorations", []), drift, relative=False)

    @classmethod
    def from_json(cls, text: str) -> "DecoratedPath":
        return cls.from_dict(json.loads(text))


def embed_cadlag(step: StepPath) -> DecoratedPath:
    """Decorate every jump with ``[min, max]`` of ``x(t-)`` and ``x(t)``."""
    return DecoratedPath(step)


# graphs and the Hausdorff distance ---------------------------------------


@dataclass(frozen=True, eq=False)
class GraphSet:
    """Finite union of segments ``(x1, z1, x2, z2)`` in the plane."""

    segments: np.ndarray

    def __init__(self, segments):
        s = np.asarray(segments, dtype=float).reshape(-1, 4)
        object.__setattr__(self, "segments", s)

    def __len__(self):
        return self.segments.shape[0]

    @property
    def vertical(self) -> np.ndarray:
        s = self.segments
        return (s[:, 0] == s[:, 2]) & (s[:, 1] != s[:, 3])

    def zmax(self) -> float:
        return float(np.max(self.segments[:, [1, 3]]))

    def zmin(self) -> float:
        return float(np.min(self.segments[:, [1, 3]]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "z1", "x2", "z2"])
        w.writerows([repr(float(v)) for v in row] for row in self.segments)
        return buf.getvalue()

    def sample_points(self, delta: float) -> np.ndarray:
        """Points along every segment with spacing at most ``delta`` (sup-norm)."""
        pts = []
        for x1, z1, x2, z2 in self.segments:
            m = int(np.ceil(max(abs(x2 - x1), abs(z2 - z1)) / delta)) + 1
            lam = np.linspace(0.0, 1.0, max(m, 2))
            pts.append(np.column_stack([x1 + lam * (x2 - x1), z1 + lam * (z2 - z1)]))
        return np.concatenate(pts)


def graph(path: DecoratedPath) -> GraphSet:
    """Segments of the completed graph: one per continuous piece plus one per decoration."""
    br = [np.array([0.0, 1.0]), path.step.times]
    if path.drift is not None:
        br.append(path.drift.knots)
    br = np.unique(np.concatenate(br))
    a, b = br[:-1], br[1:]
    pieces = np.column_stack([a, path(a), b, path.left_limit(b)])
    dec = path.decorations()
    verts = np.column_stack([dec[:, 0], dec[:, 1], dec[:, 0], dec[:, 2]])
    return GraphSet(np.concatenate([pieces, verts]))


_AXES = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def _facets(segs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scaled facet normals and offsets of (segment + unit square), per segment.

    For a convex polygon B the sup-norm distance from p to B equals
    ``max(0, max_n (n.p - h_B(n)) / |n|_1)`` over the facet normals ``n`` of
    the Minkowski sum of B and the unit square: the four axis normals and
    the two normals of the segment. Returns ``(N, h)`` with ``N`` of shape
    ``(K, 6, 2)`` already divided by ``|n|_1``.
    """
    q0, q1 = segs[:, :2], segs[:, 2:]
    w = q1 - q0
    perp = np.column_stack([-w[:, 1], w[:, 0]])
    # degenerate (point) segments: repeat an axis normal
    perp[~np.any(w != 0, axis=1)] = _AXES[0]
    N = np.concatenate([np.broadcast_to(_AXES, (segs.shape[0], 4, 2)),
                        perp[:, None, :], -perp[:, None, :]], axis=1)
    N = N / np.abs(N).sum(axis=2, keepdims=True)
    h = np.maximum(np.einsum("kfd,kd->kf", N, q0), np.einsum("kfd,kd->kf", N, q1))
    return N, h


def _pieces(p0: np.ndarray, v: np.ndarray, segs: np.ndarray):
    """Affine pieces ``(slope, intercept, owner)`` of ``lam -> d(p0 + lam v, seg_k)``."""
    N, h = _facets(segs)
    K = segs.shape[0]
    S = np.concatenate([N @ v, np.zeros((K, 1))], axis=1)
    C = np.concatenate([N @ p0 - h, np.zeros((K, 1))], axis=1)
    owner = np.repeat(np.arange(K), S.shape[1])
    return S.ravel(), C.ravel(), owner


def _envelope(S, C, K, nk, lam):
    vals = C[:, None] + S[:, None] * lam[None, :]
    per = np.full((nk, lam.size), -np.inf)
    np.maximum.at(per, K, vals)
    return per.min(axis=0)


def _directed_segment(seg: np.ndarray, others: np.ndarray, chunk: int = 2048) -> float:
    """``max_{p in seg} min_k d(p, others_k)`` evaluated exactly."""
    p0 = seg[:2]
    v = seg[2:] - seg[:2]
    S, C, K = _pieces(p0, v, others)
    nk = others.shape[0]
    # the lower envelope is piecewise linear, so its maximum sits at 0, 1 or
    # where two affine pieces cross
    i, j = np.triu_indices(S.size, 1)
    ds = S[i] - S[j]
    ok = ds != 0
    lam = (C[j][ok] - C[i][ok]) / ds[ok]
    lam = lam[(lam > 0) & (lam < 1)]
    lam = np.unique(np.concatenate([[0.0, 1.0], lam]))
    best = 0.0
    for lo in range(0, lam.size, chunk):
        best = max(best, float(np.max(_envelope(S, C, K, nk, lam[lo:lo + chunk]))))
    return best


def _point_dists(points: np.ndarray, segs: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Exact sup-norm distances from each point to each segment, ``(P, K)``."""
    N, h = _facets(segs)
    out = np.empty((points.shape[0], segs.shape[0]))
    for lo in range(0, points.shape[0], chunk):
        p = points[lo:lo + chunk]
        d = np.einsum("pd,kfd->pkf", p, N) - h[None]
        out[lo:lo + chunk] = np.maximum(d.max(axis=2), 0.0)
    return out


def directed_hausdorff(A: GraphSet, B: GraphSet) -> float:
    """``sup_{a in A} inf_{b in B} |a - b|_inf`` for segment unions."""
    sa, sb = A.segments, B.segments
    if sa.size == 0 or sb.size == 0:
        raise ParameterError("graphs must be nonempty")
    blo = np.column_stack([np.minimum(sb[:, 0], sb[:, 2]), np.minimum(sb[:, 1], sb[:, 3])])
    bhi = np.column_stack([np.maximum(sb[:, 0], sb[:, 2]), np.maximum(sb[:, 1], sb[:, 3])])
    na = sa.shape[0]
    d_end = _point_dists(np.concatenate([sa[:, :2], sa[:, 2:]]), sb)
    # each distance function is convex along a segment, so its endpoint
    # maximum bounds the envelope from above
    upper = np.maximum(d_end[:na], d_end[na:]).min(axis=1)
    lower = np.maximum(d_end[:na].min(axis=1), d_end[na:].min(axis=1))
    best = float(lower.max())
    for idx in np.argsort(-upper, kind="stable"):
        if upper[idx] <= best:
            break
        seg = sa[idx]
        alo = np.minimum(seg[:2], seg[2:])
        ahi = np.maximum(seg[:2], seg[2:])
        gap = np.max(np.maximum(np.maximum(blo - ahi, alo - bhi), 0.0), axis=1)
        rel = np.flatnonzero(gap <= upper[idx])
        best = max(best, _directed_segment(seg, sb[rel]))
    return best


def hausdorff_graphs(g1: GraphSet, g2: GraphSet) -> float:
    """Hausdorff distance between two segment unions under the sup-norm."""
    return max(directed_hausdorff(g1, g2), directed_hausdorff(g2, g1))


def m2_distance(p1: DecoratedPath, p2: DecoratedPath) -> float:
    """Hausdorff distance between the completed graphs of two paths."""
    return hausdorff_graphs(graph(p1), graph(p2))


def uniform_metric(p1: DecoratedPath, p2: DecoratedPath) -> float:
    """``sup_t`` of the Hausdorff distance between ``x1'(t)`` and ``x2'(t)``.

    Between merged breakpoints both paths are continuous and affine, so the
    supremum over an open piece is reached at its one-sided ends.
    """
    br = np.union1d(p1.breakpoints(), p2.breakpoints())
    lo1, hi1 = p1.interval(br)
    lo2, hi2 = p2.interval(br)
    at = np.maximum(np.abs(lo1 - lo2), np.abs(hi1 - hi2))
    right = np.abs(p1(br) - p2(br))
    left = np.abs(p1.left_limit(br) - p2.left_limit(br))[1:]
    return float(max(at.max(), right.max(), left.max() if left.size else 0.0))


# functionals on E ---------------------------------------------------------


def local_max(path: DecoratedPath, t1: float, t2: float) -> float:
    """``sup{z : z in x'(t), t1 <= t <= t2}``."""
    if not 0.0 <= t1 < t2 <= 1.0:
        raise ParameterError(f"need 0 <= t1 < t2 <= 1, got ({t1}, {t2})")
    out = -np.inf
    d0 = np.searchsorted(path.dec_t, t1, side="left")
    d1 = np.searchsorted(path.dec_t, t2, side="right")
    if d1 > d0:
        dt = path.dec_t[d0:d1]
        out = float(np.max(path.dec_hi[d0:d1] + path._b(dt)))
    if path.drift is None:
        st = path.step
        i0 = np.searchsorted(st.times, t1, side="right")
        i1 = np.searchsorted(st.times, t2, side="right")
        return max(out, float(np.max(st.values[i0:i1 + 1])))
    br = path.breakpoints()
    inner = br[(br > t1) & (br < t2)]
    pts = np.concatenate([[t1, t2], inner])
    vals = np.concatenate([path(pts), path.left_limit(np.concatenate([[t2], inner]))])
    return max(out, float(np.max(vals)))


def cadlag_window_max(step: StepPath, t1: float, t2: float) -> float:
    """``local_max(embed_cadlag(step), t1, t2)`` without building the decorations."""
    if not 0.0 <= t1 < t2 <= 1.0:
        raise ParameterError(f"need 0 <= t1 < t2 <= 1, got ({t1}, {t2})")
    # a jump at t1 is decorated, so its left limit belongs to the window
    i0 = np.searchsorted(step.times, t1, side="left")
    i1 = np.searchsorted(step.times, t2, side="right")
    return float(np.max(step.values[i0:i1 + 1]))


def local_min(path: DecoratedPath, t1: float, t2: float) -> float:
    return -local_max(-path, t1, t2)


def sup_path(path: DecoratedPath) -> StepPath:
    """Running supremum ``t -> sup{z in x'(s), s <= t}`` of a drift-free path."""
    if path.drift is not None:
        raise ParameterError("running supremum is a step path only for drift-free paths")
    st = path.step
    ev = np.union1d(st.times, path.dec_t)
    ev = ev[ev > 0]
    lev = st(ev)
    pos = np.searchsorted(path.dec_t, ev)
    pos_c = np.minimum(pos, max(path.dec_t.size - 1, 0))
    if path.dec_t.size:
        has = (pos < path.dec_t.size) & (path.dec_t[pos_c] == ev)
        lev = np.where(has, np.maximum(lev, path.dec_hi[pos_c]), lev)
    start = st.values[0]
    if path.dec_t.size and path.dec_t[0] == 0.0:
        start = max(start, path.dec_hi[0])
    vals = np.maximum.accumulate(np.concatenate([[start], lev]))
    return StepPath(ev, vals)


def inf_path(path: DecoratedPath) -> StepPath:
    return -sup_path(-path)


def add_continuous(path: DecoratedPath, b: PiecewiseLinear) -> DecoratedPath:
    """``x' + b``: step part shifted by ``b``, each decoration translated by ``b(t)``."""
    drift = b if path.drift is None else path.drift + b
    dec = np.column_stack([path.dec_t, path.dec_lo, path.dec_hi])
    return DecoratedPath(path.step, dec, drift, check=False)


def m2_convergence_check(paths, limit: DecoratedPath, grid, tol: float = 0.05) -> dict:
    """Windowed maxima of ``+-paths_k`` against those of ``+-limit``.

    A window is flagged when the mean gap over the last quarter of the
    sequence exceeds ``tol``.
    """
    paths = list(paths)
    grid = [tuple(map(float, w)) for w in grid]
    if not any(w[0] == 0.0 for w in grid) or not any(w[1] == 1.0 for w in grid):
        raise ParameterError("grid needs a window starting at 0 and one ending at 1")
    neg_paths = [-p for p in paths]
    neg_lim = -limit
    windows = []
    for t1, t2 in grid:
        row = {"window": [t1, t2]}
        for sign, seq, lim in (("plus", paths, limit), ("minus", neg_paths, neg_lim)):
            target = local_max(lim, t1, t2)
            gaps = [abs(local_max(p, t1, t2) - target) for p in seq]
            tail = gaps[len(gaps) - max(1, len(gaps) // 4):] if gaps else [0.0]
            row[sign] = {"limit": target, "gaps": gaps, "tail_mean": float(np.mean(tail))}
        row["converging"] = bool(max(row["plus"]["tail_mean"], row["minus"]["tail_mean"]) <= tol)
        windows.append(row)
    return {"windows": windows, "tol": tol, "passed": all(w["converging"] for w in windows)}
