"""Partial-sum processes, their decorated stable limits and stable parameters.

For ``alpha < 1`` the limit path jumps by ``P_i sum_j Q_ij`` at ``T_i``
and carries the decoration ``V(T_i-) + P_i [inf_k S_k, sup_k S_k]``, where
``S_k`` are the partial sums of ``Q_i`` including the empty one. For
``1 <= alpha < 2`` coordinates of ``P_i Q_i`` at most ``eps`` in modulus are
dropped and the path is recentred by ``t * int_{eps<|x|<=1} x mu(dx)``.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, special, stats

from ._util import as_seedseq, replicate
from .espace import (DecoratedPath, PiecewiseLinear, StepPath, add_continuous, cadlag_window_max,
                     local_max)
from .limitpp import LinearQ, PointQ, QSampler, sample_limit_pp
from .models import (LinearModel, Model, ParameterError, RegVarLaw, SeriesSample,
                     pareto_innovations, quantile_an, simulate, theta_linear)
from .seqspace import stack_clusters


# the constant c0 -------------------------------------------------------------


def c0_quadrature() -> float:
    """``int_0^inf (sin y - y 1{y<=1}) / y^2 dy`` by adaptive quadrature.

    ``[0, 1]`` is integrated directly and ``[1, inf)`` with QUADPACK's
    Fourier-weight routine for ``sin(y) / y^2``.
    """
    head, _ = integrate.quad(lambda y: (np.sin(y) - y) / y**2 if y > 0 else 0.0, 0.0, 1.0,
                             epsabs=1e-14, epsrel=1e-14, limit=200)
    tail, _ = integrate.quad(lambda y: y**-2, 1.0, np.inf, weight="sin", wvar=1.0,
                             epsabs=1e-13, limlst=100)
    return head + tail


def c0_series() -> float:
    """Same constant from the Taylor series on ``[0, 1]`` and the sine/cosine integrals.

    ``int_0^1 (sin y - y)/y^2 dy = sum_k (-1)^k / (2k (2k+1)!)`` and
    ``int_1^inf sin(y)/y^2 dy = sin(1) - Ci(1)``.
    """
    k = np.arange(1, 20)
    head = float(np.sum((-1.0) ** k / (2 * k * special.factorial(2 * k + 1))))
    _, ci = special.sici(1.0)
    return head + np.sin(1.0) - float(ci)


@lru_cache(maxsize=1)
def c0() -> float:
    return c0_quadrature()


# paths --------------------------------------------------------------------------


@dataclass(frozen=True)
class CenteringSpec:
    """How partial sums and limit paths are centred.

    ``mode="none"`` is for ``alpha < 1``. ``mode="truncated-mean"`` (for
    ``1 <= alpha < 2``) subtracts the mean of the small values; ``epsilon``
    is the truncation level of the limit construction and ``tail_balance``
    the weight ``P(X > x)/P(|X| > x)`` of the marginal tail used in the
    analytic limit centring.
    """

    mode: str = "none"
    epsilon: float | None = None
    mean_source: str = "analytic"
    tail_balance: float | None = None

    def __post_init__(self):
        if self.mode not in ("none", "truncated-mean"):
            raise ParameterError(f"unknown centering mode {self.mode!r}")
        if self.mean_source not in ("analytic", "plugin"):
            raise ParameterError(f"unknown mean source {self.mean_source!r}")
        if self.mode == "truncated-mean" and (self.epsilon is None or not self.epsilon > 0):
            raise ParameterError("truncated-mean centering needs epsilon > 0")


def _values(sample) -> np.ndarray:
    return sample.values if isinstance(sample, SeriesSample) else np.asarray(sample, dtype=float)


def partial_sum_path(sample, a_n: float) -> StepPath:
    """``S_n(t) = sum_{i <= nt} X_i / a_n`` with jumps at ``i/n``."""
    if not a_n > 0:
        raise ParameterError("a_n must be positive")
    x = _values(sample)
    n = x.size
    return StepPath(np.arange(1, n + 1) / n, np.concatenate([[0.0], np.cumsum(x / a_n)]))


def truncated_mean(sample, a_n: float, level: float = 1.0, source: str = "analytic",
                   law: RegVarLaw | None = None) -> float:
    """``E[(X/a_n) 1{|X| <= level a_n}]``, analytic for Pareto marginals or plug-in."""
    if source == "analytic":
        if law is None and isinstance(sample, SeriesSample) and isinstance(sample.model, RegVarLaw):
            law = sample.model
        if law is None:
            raise ParameterError("analytic centring needs a Pareto marginal; use mean_source='plugin'")
        return law.truncated_mean(level * a_n) / a_n
    x = _values(sample)
    if x.size < 1000:
        warnings.warn("plug-in truncated mean from fewer than 1000 values", RuntimeWarning, stacklevel=2)
    return float(np.mean(np.where(np.abs(x) <= level * a_n, x, 0.0)) / a_n)


def centered_path(sample, a_n: float, spec: CenteringSpec, law: RegVarLaw | None = None) -> StepPath:
    """``V_n(t) = S_n(t) - floor(nt) E[(X/a_n) 1{|X| <= a_n}]``."""
    path = partial_sum_path(sample, a_n)
    if spec.mode == "none":
        return path
    m = truncated_mean(sample, a_n, 1.0, spec.mean_source, law)
    k = np.arange(path.values.size)
    return StepPath(path.times, path.values - k * m)


def marginal_tail_balance(model: Model) -> float:
    """``lim P(X > x) / P(|X| > x)`` for Pareto and linear models."""
    if isinstance(model, RegVarLaw):
        return model.p
    if isinstance(model, LinearModel):
        c, a, p = model.c, model.alpha, model.p
        pos = np.sum(np.where(c > 0, c, 0.0) ** a) * p + np.sum(np.where(c < 0, -c, 0.0) ** a) * (1 - p)
        return float(pos / model.tail_constant())
    raise ParameterError("tail balance is only known for Pareto and linear models")


def centering_drift(alpha: float, epsilon: float, tail_balance: float) -> float:
    """``int_{eps < |x| <= 1} x mu(dx)`` for ``mu`` with tail ``x^-alpha`` and balance ``p``."""
    s = 2.0 * tail_balance - 1.0
    if alpha == 1.0:
        return s * np.log(1.0 / epsilon)
    return s * alpha / (alpha - 1.0) * (epsilon ** (1.0 - alpha) - 1.0)


def _sweep(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full sums and inf/sup of partial sums (empty sum included) per row."""
    cs = np.cumsum(rows, axis=1)
    return cs[:, -1], np.minimum(cs.min(axis=1), 0.0), np.maximum(cs.max(axis=1), 0.0)


def decorated_path_from_atoms(times: np.ndarray, atoms: np.ndarray,
                              drift: PiecewiseLinear | None = None) -> DecoratedPath:
    """Path jumping by the row sums of ``atoms`` at ``times``, decorated by partial-sum ranges."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return DecoratedPath(StepPath.constant(0.0), (), drift)
    if np.any(np.diff(times) <= 0):
        raise ParameterError("atom times must be strictly increasing")
    s, lo, hi = _sweep(np.atleast_2d(atoms))
    step = StepPath.from_jumps(times, s)
    before = step.values[:-1]
    dec = np.column_stack([times, before + lo, before + hi])
    return DecoratedPath(step, dec, drift)


def limit_decorated_path(pp, alpha: float, centering: CenteringSpec | None = None) -> DecoratedPath:
    """Decorated limit ``V'`` built from a limit point process."""
    centering = centering or CenteringSpec()
    atoms = pp.atoms
    if alpha < 1.0:
        if centering.mode != "none":
            raise ParameterError("alpha < 1 needs no centring (mode='none')")
        return decorated_path_from_atoms(pp.T, atoms)
    if not alpha < 2.0:
        raise ParameterError("alpha must be below 2")
    if centering.mode != "truncated-mean":
        raise ParameterError("alpha >= 1 needs truncated-mean centring with epsilon")
    eps = centering.epsilon
    if not np.isclose(pp.p_min, eps, rtol=1e-12, atol=0):
        raise ParameterError(f"point process floor {pp.p_min} must equal epsilon {eps}")
    if centering.tail_balance is None:
        raise ParameterError("analytic limit centring needs tail_balance")
    atoms = np.where(np.abs(atoms) > eps, atoms, 0.0)
    m = centering_drift(alpha, eps, centering.tail_balance)
    return decorated_path_from_atoms(pp.T, atoms, PiecewiseLinear.linear(-m))


def block_decorated_path(sample, r_n: int, a_n: float) -> DecoratedPath:
    """Blocks of ``r_n`` values collapsed to one decorated jump at ``i / k_n``."""
    x = _values(sample)
    k = x.size // r_n
    blocks = x[:k * r_n].reshape(k, r_n) / a_n
    nz = np.flatnonzero(np.any(blocks != 0, axis=1))
    return decorated_path_from_atoms((nz + 1) / k, blocks[nz])


# stable parameters ---------------------------------------------------------------


def _sgnpow(x, a):
    return np.sign(x) * np.abs(x) ** a


def _xlogabs(x):
    ax = np.abs(x)
    return np.where(ax > 0, x * np.log(np.where(ax > 0, ax, 1.0)), 0.0)


@dataclass
class StableParams:
    """Scale ``sigma``, skewness ``beta`` and location ``b`` of an alpha-stable law."""

    alpha: float
    sigma: float
    beta: float
    b: float
    c0: float
    se: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _weighted(samples, weights):
    """Mean and standard error of per-sample values under weights (exact if se is 0)."""
    if weights is None:
        m = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
        return m, se
    return weights @ samples, np.zeros(samples.shape[1:])


def _rows_and_weights(sampler, mc_samples, rng, exact):
    sup = sampler.support() if hasattr(sampler, "support") else None
    if exact is None:
        exact = sup is not None
    if exact:
        if sup is None:
            raise ParameterError("exact evaluation needs a finite-support sampler")
        return sup[1], sup[0]
    return sampler.sample(int(mc_samples), rng), None


def _finalize(alpha, m, se, cov_ab, flags, extra) -> StableParams:
    """``m`` holds the means of (|S|^a, S^<a>, location integrand)."""
    A, B, L = m
    sig_a = A
    sigma = max(sig_a, 0.0) ** (1.0 / alpha)
    beta = B / A if A > 0 else 0.0
    # delta method for sigma = A^(1/a) and beta = B/A
    se_sigma = sigma / alpha * se[0] / A if A > 0 else 0.0
    se_beta = np.sqrt(max(cov_ab, 0.0)) / A if A > 0 else 0.0
    if abs(beta) > 1 + 1e-9:
        flags.append("skewness outside [-1, 1]")
    return StableParams(alpha, float(sigma), float(np.clip(beta, -1, 1)), float(L), c0(),
                        {"sigma": float(se_sigma), "beta": float(se_beta), "b": float(se[2]),
                         "sigma_alpha": float(se[0])}, flags, extra)


def stable_params_from_Q(alpha: float, theta: float, q: QSampler, p: float | None = None,
                         mc_samples: int = 100000, seed=None, exact: bool | None = None) -> StableParams:
    """Stable parameters from the cluster-shape law.

    Uses exact expectations when the sampler has finite support (unless
    ``exact=False``), else Monte Carlo. Also reports the residual of
    ``theta E[sum_j Q_j |Q_j|^(alpha-1)] = 2p - 1`` when ``p`` is given.
    """
    if not 0 < alpha < 2:
        raise ParameterError("alpha must lie in (0, 2)")
    rng = np.random.default_rng(seed)
    rows, w = _rows_and_weights(q, mc_samples, rng, exact)
    S = rows.sum(axis=1)
    absS = np.abs(S) ** alpha
    sgnS = _sgnpow(S, alpha)
    sum_sgn = _sgnpow(rows, alpha).sum(axis=1)
    if alpha < 1:
        loc = np.zeros_like(S)
    elif alpha > 1:
        loc = alpha / (alpha - 1.0) * theta * sum_sgn
    else:
        # sum_j Q_j log(1/|Q_j|) = -sum_j Q_j log|Q_j|
        loc = theta * (c0() * S - _xlogabs(S) + _xlogabs(rows).sum(axis=1))
    dh = theta * _sgnpow(rows, alpha).sum(axis=1)
    vals = np.column_stack([theta * absS, theta * sgnS, loc, dh])
    m, se = _weighted(vals, w)
    flags = []
    if alpha > 1:
        mom = np.abs(rows).sum(axis=1) ** alpha
        if w is None and mom.max() > 0.5 * mom.sum():
            flags.append("moment condition: one sample dominates E[(sum|Q_j|)^alpha]")
    if alpha == 1:
        lm = np.log1p(np.abs(rows).sum(axis=1)) * np.abs(rows).sum(axis=1)
        if w is None and lm.max() > 0.5 * lm.sum():
            flags.append("log-moment condition: one sample dominates")
    cov_ab = 0.0
    if w is None:
        beta = m[1] / m[0] if m[0] > 0 else 0.0
        cov_ab = np.var(vals[:, 1] - beta * vals[:, 0], ddof=1) / vals.shape[0]
    extra = {"route": "Q", "exact": w is not None}
    if p is not None:
        extra["balance_residual"] = float(m[3] - (2 * p - 1))
        extra["balance_se"] = float(se[3])
    return _finalize(alpha, m[:3], se[:3], cov_ab, flags, extra)


class LinearForwardTheta:
    """Forward spectral tail sampler of a linear model (finite support)."""

    def __init__(self, model: LinearModel):
        from .models import forward_spectral_linear
        self.weights, self.rows = forward_spectral_linear(model)
        self.width = self.rows.shape[1]

    def support(self):
        return self.weights, self.rows

    def sample(self, size, rng):
        return self.rows[rng.choice(self.rows.shape[0], size=size, p=self.weights)]


def stable_params_from_forward_theta(alpha: float, sampler, mc_samples: int = 100000, seed=None,
                                     exact: bool | None = None) -> StableParams:
    """Stable parameters from the forward spectral tail ``(Theta_0, Theta_1, ...)``.

    Uses differences of functionals of ``sum_{j>=0} Theta_j`` and
    ``sum_{j>=1} Theta_j``.
    """
    if not 0 < alpha < 2:
        raise ParameterError("alpha must lie in (0, 2)")
    rng = np.random.default_rng(seed)
    rows, w = _rows_and_weights(sampler, mc_samples, rng, exact)
    if not np.allclose(np.abs(rows[:, 0]), 1.0):
        raise ParameterError("forward sequences need |Theta_0| = 1")
    S0 = rows.sum(axis=1)
    S1 = rows[:, 1:].sum(axis=1)
    A = np.abs(S0) ** alpha - np.abs(S1) ** alpha
    B = _sgnpow(S0, alpha) - _sgnpow(S1, alpha)
    if alpha < 1:
        loc = np.zeros_like(S0)
    elif alpha > 1:
        loc = alpha / (alpha - 1.0) * rows[:, 0]
    else:
        loc = c0() * rows[:, 0] - (_xlogabs(S0) - _xlogabs(S1))
    vals = np.column_stack([A, B, loc])
    m, se = _weighted(vals, w)
    cov_ab = 0.0
    if w is None:
        beta = m[1] / m[0] if m[0] > 0 else 0.0
        cov_ab = np.var(B - beta * A, ddof=1) / A.size
    return _finalize(alpha, m, se, cov_ab, [], {"route": "forward", "exact": w is not None})


def m2_condition_check(q_samples) -> tuple[float, list[bool]]:
    """Whether ``inf_k S_k = -(sum Q)_-`` and ``sup_k S_k = (sum Q)_+`` per shape."""
    rows = q_samples if isinstance(q_samples, np.ndarray) else stack_clusters(q_samples)
    rows = np.atleast_2d(rows)
    if rows.shape[0] == 0:
        return 1.0, []
    s, lo, hi = _sweep(rows)
    tol = 1e-12 * np.maximum(1.0, np.abs(rows).sum(axis=1))
    ok = (np.abs(lo - np.minimum(s, 0.0)) <= tol) & (np.abs(hi - np.maximum(s, 0.0)) <= tol)
    return float(ok.mean()), [bool(v) for v in ok]


def small_jump_diagnostic(sample, a_n: float, epsilons: Sequence[float],
                          law: RegVarLaw | None = None) -> dict[float, float]:
    """``max_k |sum_{i<=k} (X_i 1{|X_i| <= a_n eps} - m_eps)| / a_n`` per ``eps``.

    ``m_eps`` is the analytic truncated mean when ``law`` is given (or the
    sample was drawn from a Pareto law), else the plug-in mean.
    """
    x = _values(sample)
    if law is None and isinstance(sample, SeriesSample) and isinstance(sample.model, RegVarLaw):
        law = sample.model
    out = {}
    for eps in epsilons:
        level = a_n * eps
        small = np.where(np.abs(x) <= level, x, 0.0)
        m = law.truncated_mean(level) if law is not None else small.mean()
        out[float(eps)] = float(np.max(np.abs(np.cumsum(small - m))) / a_n)
    return out


def karamata_check(alpha: float, n: int, epsilons: Sequence[float], mc_samples: int,
                   seed=None) -> list[dict]:
    """``(n/a_n) E[|X| 1{|X| <= a_n eps}]`` by simulation against its limit.

    Reports the Monte Carlo estimate, the exact finite-``n`` value and the
    limit ``alpha eps^(1-alpha) / (1-alpha)`` for a Pareto law with
    ``alpha < 1``.
    """
    if not 0 < alpha < 1:
        raise ParameterError("the check is for alpha < 1")
    law = RegVarLaw(alpha, 1.0)
    a_n = quantile_an(law, n)
    rng = np.random.default_rng(seed)
    x = pareto_innovations(law, int(mc_samples), rng)
    out = []
    for eps in epsilons:
        y = (n / a_n) * np.where(x <= a_n * eps, x, 0.0)
        out.append({"epsilon": float(eps), "mc": float(y.mean()),
                    "se": float(y.std(ddof=1) / np.sqrt(y.size)),
                    "exact": float((n / a_n) * law.abs_truncated_mean(a_n * eps)),
                    "limit": float(alpha * eps ** (1 - alpha) / (1 - alpha))})
    return out


# experiments ------------------------------------------------------------------------


def limit_inputs(model: Model) -> tuple[float, QSampler]:
    """Extremal index and shape sampler of a Pareto or linear model."""
    if isinstance(model, RegVarLaw):
        return 1.0, PointQ(model.p)
    if isinstance(model, LinearModel):
        return theta_linear(model), LinearQ(model)
    raise ParameterError("limit law is known only for Pareto and linear models")


def _mean_shape_sum(q: QSampler) -> float:
    sup = q.support()
    if sup is None:
        return float(q.sample(100000, np.random.default_rng(0)).sum(axis=1).mean())
    w, rows = sup
    return float(w @ rows.sum(axis=1))


def limit_path_sampler(model: Model, p_min: float = 1e-4):
    """Draw ``V'`` for ``alpha < 1`` with the mean of the points below ``p_min`` added as drift."""
    alpha = model.alpha
    if not alpha < 1:
        raise ParameterError("limit sampler without centring needs alpha < 1")
    theta, q = limit_inputs(model)
    rate = theta * _mean_shape_sum(q) * alpha / (1 - alpha) * p_min ** (1 - alpha)
    comp = PiecewiseLinear.linear(rate)

    def draw(seed) -> DecoratedPath:
        pp = sample_limit_pp(theta, alpha, q, p_min, 1.0, seed)
        path = limit_decorated_path(pp, alpha)
        return add_continuous(path, comp) if rate else path

    return draw


def ks_distance(a, b) -> float:
    return float(stats.ks_2samp(a, b).statistic)


def sup_law_experiment(model: Model, n_grid: Sequence[int], replications: int, seed=None,
                       limit_draws: int = 20000, p_min: float = 1e-4, tol: float = 0.03,
                       threads: int | None = 1) -> dict:
    """``sup_{s<=1} V_n(s)`` against ``sup_{s<=1}`` of the decorated limit.

    Both sides are evaluated with the local maximum on ``[0, 1]``; for the
    limit it includes decoration tops. Supports Pareto and linear models
    with ``alpha < 1``.
    """
    if replications <= 0:
        return {"rows": [], "passed": True}
    alpha = model.alpha
    if not alpha < 1:
        raise ParameterError("the sup-law experiment covers alpha < 1")
    root = as_seedseq(seed)
    s_lim, *s_n = root.spawn(1 + len(n_grid))
    draw = limit_path_sampler(model, p_min)
    lim = np.array(replicate(lambda ss: local_max(draw(ss), 0.0, 1.0), s_lim, limit_draws, threads))
    rows = []
    for n, ss in zip(n_grid, s_n):
        a_n = quantile_an(model, n)

        def one(s, n=n, a_n=a_n):
            return cadlag_window_max(partial_sum_path(simulate(model, n, s), a_n), 0.0, 1.0)

        emp = np.array(replicate(one, ss, replications, threads))
        ks = ks_distance(emp, lim)
        rows.append({"n": int(n), "replications": int(replications), "ks": ks,
                     "passed": bool(ks < tol)})
    return {"model": model.to_dict(), "limit_draws": int(limit_draws), "p_min": p_min,
            "tol": tol, "rows": rows, "passed": all(r["passed"] for r in rows)}


def window_max_gap(emp: np.ndarray, lim: np.ndarray, levels=np.linspace(0.05, 0.95, 19)) -> float:
    """Largest gap between the two laws at the limit quantiles ``q_lim(p)``.

    At each ``q`` both laws give the interval ``[F(q-), F(q)]``; the gap is
    the distance between the intervals, so an atom of the limit (e.g. a
    windowed maximum that is 0 with positive probability) is not penalised
    when the empirical mass sits just beside it.
    """
    emp, lim = np.sort(emp), np.sort(lim)
    q = np.quantile(lim, levels)

    def bracket(x):
        return (np.searchsorted(x, q, side="left") / x.size, np.searchsorted(x, q, side="right") / x.size)

    e_lo, e_hi = bracket(emp)
    l_lo, l_hi = bracket(lim)
    gap = np.maximum(np.maximum(e_lo - l_hi, l_lo - e_hi), 0.0)
    return float(np.max(gap))


DEFAULT_WINDOWS = ((0.0, 1.0), (0.0, 0.5), (0.5, 1.0), (0.25, 0.75), (0.0, 0.25), (0.75, 1.0))


def m2_distribution_experiment(model: Model, n_grid: Sequence[int], replications: int, seed=None,
                               limit_draws: int = 20000, windows=DEFAULT_WINDOWS,
                               p_min: float = 1e-4, tol: float = 0.05,
                               threads: int | None = 1) -> dict:
    """Distribution-level local-maximum check of ``V_n`` against ``V'``.

    For each window and sign, the windowed maximum of ``+-V_n`` is compared
    with that of ``+-V'`` at matched quantiles of the limit; the report gives
    the median gap over windows for each ``n``.
    """
    root = as_seedseq(seed)
    s_lim, *s_n = root.spawn(1 + len(n_grid))
    draw = limit_path_sampler(model, p_min)

    def lim_stats(ss):
        p = draw(ss)
        neg = -p
        return [local_max(p, a, b) for a, b in windows] + [local_max(neg, a, b) for a, b in windows]

    lim = np.array(replicate(lim_stats, s_lim, limit_draws, threads))
    rows = []
    for n, ss in zip(n_grid, s_n):
        a_n = quantile_an(model, n)

        def one(s, n=n, a_n=a_n):
            path = partial_sum_path(simulate(model, n, s), a_n)
            return ([cadlag_window_max(path, a, b) for a, b in windows]
                    + [cadlag_window_max(-path, a, b) for a, b in windows])

        emp = np.array(replicate(one, ss, replications, threads))
        gaps = [window_max_gap(emp[:, j], lim[:, j]) for j in range(lim.shape[1])]
        rows.append({"n": int(n), "gaps": gaps, "median_gap": float(np.median(gaps))})
    med = [r["median_gap"] for r in rows]
    monotone = all(b < a for a, b in zip(med, med[1:]))
    return {"model": model.to_dict(), "windows": [list(w) for w in windows], "rows": rows,
            "monotone": bool(monotone), "final_gap": med[-1] if med else None, "tol": tol,
            "passed": bool(monotone and med and med[-1] < tol)}
