"""Heavy-tailed innovations, stationary models and their closed-form extremes.

Innovations are exact two-sided Pareto variables: ``P(|X| > x) = x**-alpha``
for ``x >= 1`` with a positive sign with probability ``p``. Linear models
are finite moving averages of such innovations; GARCH(1,1) uses Gaussian
noise and is heavy tailed through its volatility recursion.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .seqspace import Cluster


class ParameterError(ValueError):
    """Invalid model or experiment parameter."""


class DiagnosticError(RuntimeError):
    """An estimator had too little data to produce a value."""


@dataclass(frozen=True)
class RegVarLaw:
    """Two-sided Pareto law with tail index ``alpha`` and sign balance ``p``."""

    alpha: float
    p: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")

    def tail(self, x):
        """``P(|X| > x)``."""
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 1.0, np.maximum(x, 1.0) ** -self.alpha)

    def truncated_mean(self, upper: float) -> float:
        """``E[X 1{|X| <= upper}]``."""
        a, s = self.alpha, 2.0 * self.p - 1.0
        if upper <= 1.0:
            return 0.0
        if a == 1.0:
            return s * np.log(upper)
        return s * a / (a - 1.0) * (1.0 - upper ** (1.0 - a))

    def abs_truncated_mean(self, upper: float) -> float:
        """``E[|X| 1{|X| <= upper}]``."""
        return RegVarLaw(self.alpha, 1.0).truncated_mean(upper)

    def to_dict(self) -> dict:
        return {"kind": "pareto", "alpha": self.alpha, "p": self.p}


@dataclass(frozen=True)
class LinearModel:
    """Finite moving average ``X_t = sum_j c_j xi_{t-j}``, ``j = j_min..``."""

    coeffs: tuple[float, ...]
    innovation: RegVarLaw
    j_min: int = 0

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if not c or not any(c):
            raise ParameterError("at least one coefficient must be nonzero")
        if not all(np.isfinite(c)):
            raise ParameterError("coefficients must be finite")
        if not self.j_min <= 0 < self.j_min + len(c) or c[-self.j_min] == 0.0:
            raise ParameterError("the lag-0 coefficient must be present and nonzero")

    @property
    def alpha(self) -> float:
        return self.innovation.alpha

    @property
    def p(self) -> float:
        return self.innovation.p

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.coeffs)

    def tail_constant(self) -> float:
        """``sum_j |c_j|**alpha``, the limit of ``P(|X_0|>u)/P(|xi_0|>u)``."""
        return float(np.sum(np.abs(self.c) ** self.alpha))

    def to_dict(self) -> dict:
        d = {"kind": "linear", "coeffs": list(self.coeffs), "alpha": self.alpha, "p": self.p}
        if self.j_min:
            d["j_min"] = self.j_min
        return d


@dataclass(frozen=True)
class GarchModel:
    """GARCH(1,1): ``X_t = sigma_t Z_t`` with Gaussian ``Z_t``."""

    a0: float
    a1: float
    b1: float
    tail_alpha_hint: float | None = None

    def __post_init__(self):
        for name in ("a0", "a1", "b1"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive, got {v}")
        if self.tail_alpha_hint is not None and not self.tail_alpha_hint > 0:
            raise ParameterError("tail_alpha_hint must be positive")

    def to_dict(self) -> dict:
        d = {"kind": "garch", "a0": self.a0, "a1": self.a1, "b1": self.b1}
        if self.tail_alpha_hint is not None:
            d["tail_alpha_hint"] = self.tail_alpha_hint
        return d


Model = RegVarLaw | LinearModel | GarchModel


def model_from_dict(d: dict[str, Any]) -> Model:
    """Build a model from its JSON descriptor; unknown keys are rejected."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ParameterError("model descriptor needs a 'kind' field")
    kind = d["kind"]
    allowed = {
        "pareto": {"kind", "alpha", "p"},
        "linear": {"kind", "coeffs", "alpha", "p", "j_min"},
        "garch": {"kind", "a0", "a1", "b1", "tail_alpha_hint"},
    }
    if kind not in allowed:
        raise ParameterError(f"unknown model kind {kind!r}")
    extra = set(d) - allowed[kind]
    if extra:
        raise ParameterError(f"unknown model field(s): {sorted(extra)}")
    try:
        if kind == "pareto":
            return RegVarLaw(float(d["alpha"]), float(d.get("p", 1.0)))
        if kind == "linear":
            law = RegVarLaw(float(d["alpha"]), float(d.get("p", 1.0)))
            return LinearModel(tuple(d["coeffs"]), law, int(d.get("j_min", 0)))
        hint = d.get("tail_alpha_hint")
        return GarchModel(float(d["a0"]), float(d["a1"]), float(d["b1"]),
                          None if hint is None else float(hint))
    except KeyError as exc:
        raise ParameterError(f"model descriptor missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ParameterError(f"bad model descriptor: {exc}") from None


@dataclass(frozen=True, eq=False)
class SeriesSample:
    """A simulated path together with what produced it."""

    values: np.ndarray
    model: Model | None = None
    seed: Any = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ParameterError("a series needs at least one value")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x"])
        w.writerows([repr(float(v))] for v in self.values)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SeriesSample":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["x"]:
            raise ParameterError("series CSV must start with header 'x'")
        return cls(np.array([float(r[0]) for r in rows[1:]]))


def _values(sample) -> np.ndarray:
    return sample.values if isinstance(sample, SeriesSample) else np.asarray(sample, dtype=float)


def _check_n(n: int):
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")


def pareto_innovations(law: RegVarLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    # numpy's pareto is the Lomax law; shifting by one gives P(|X|>x) = x^-alpha
    mag = rng.pareto(law.alpha, n) + 1.0
    if law.p == 1.0:
        return mag
    sign = np.where(rng.random(n) < law.p, 1.0, -1.0)
    return sign * mag


def sample_regvar(law: RegVarLaw, n: int, seed=None) -> SeriesSample:
    """I.i.d. two-sided Pareto draws."""
    _check_n(n)
    rng = np.random.default_rng(seed)
    return SeriesSample(pareto_innovations(law, n, rng), law, seed)


def quantile_an(model: Model, n: int, sample: SeriesSample | None = None, k: int | None = None) -> float:
    """Scaling sequence ``a_n`` with ``n P(|X_0| > a_n) -> 1``.

    For GARCH the tail constant is unknown, so a reference ``sample`` is
    required together with ``tail_alpha_hint``; the quantile is then
    extrapolated from the ``k``-th largest ``|X|`` (Weissman's estimator).
    """
    _check_n(n)
    if isinstance(model, RegVarLaw):
        return float(n) ** (1.0 / model.alpha)
    if isinstance(model, LinearModel):
        return (n * model.tail_constant()) ** (1.0 / model.alpha)
    if isinstance(model, GarchModel):
        if model.tail_alpha_hint is None or sample is None:
            raise ParameterError(
                "a_n for GARCH needs tail_alpha_hint and a reference sample "
                "(estimate the index with hill_estimate first)")
        x = np.sort(np.abs(_values(sample)))[::-1]
        N = x.size
        k = k or max(10, N // 100)
        if not 1 <= k < N:
            raise ParameterError("k out of range for the reference sample")
        return float(x[k] * (k * n / N) ** (1.0 / model.tail_alpha_hint))
    raise ParameterError(f"unsupported model {type(model).__name__}")


def simulate_linear(model: LinearModel, n: int, seed=None, innovations=None) -> SeriesSample:
    """Stationary moving-average path of length ``n``.

    ``n + len(coeffs) - 1`` innovations are drawn so that every output value
    is a complete weighted sum. ``innovations`` replaces the random draws
    (useful for deterministic checks).
    """
    _check_n(n)
    c = model.c
    m = n + c.size - 1
    if innovations is None:
        xi = pareto_innovations(model.innovation, m, np.random.default_rng(seed))
    else:
        xi = np.broadcast_to(np.asarray(innovations, dtype=float), (m,)).copy()
    # X_t = sum_j c_j xi_{t-j}; 'valid' keeps only fully formed sums
    x = np.convolve(xi, c, mode="valid")
    return SeriesSample(x, model, seed)


def simulate_garch(model: GarchModel, n: int, burnin: int = 1000, seed=None) -> SeriesSample:
    """GARCH(1,1) path after discarding ``burnin`` steps.

    Explosive parameter sets (e.g. divergent Lyapunov exponent) are not
    detected; the caller is responsible for picking a stationary regime.
    """
    _check_n(n)
    if burnin < 0:
        raise ParameterError("burnin must be nonnegative")
    rng = np.random.default_rng(seed)
    total = n + burnin
    z = rng.standard_normal(total)
    a0, a1, b1 = model.a0, model.a1, model.b1
    s2 = a0 / (1.0 - a1 - b1) if a1 + b1 < 1.0 else a0
    x = np.empty(total)
    x_prev = 0.0
    for t in range(total):
        if t:
            s2 = a0 + a1 * x_prev * x_prev + b1 * s2
        x_prev = np.sqrt(s2) * z[t]
        x[t] = x_prev
    return SeriesSample(x[burnin:], model, seed, {"burnin": burnin})


def hill_estimate(sample, k: int) -> float:
    """Hill estimator of the tail index from the top ``k`` values of ``|X|``."""
    x = np.abs(_values(sample))
    n = x.size
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    top = np.sort(x)[n - k - 1:]
    if top[0] <= 0:
        raise DiagnosticError("the (k+1)-th largest |X| must be positive")
    mean_log = np.mean(np.log(top[1:] / top[0]))
    if mean_log == 0:
        raise DiagnosticError("zero log-spacings: tail index is not identifiable")
    return float(1.0 / mean_log)


def theta_linear(model: LinearModel) -> float:
    """Extremal index ``max|c|^a / sum|c|^a`` of a linear process."""
    w = np.abs(model.c) ** model.alpha
    return float(w.max() / w.sum())


def q_shape_linear(model: LinearModel) -> np.ndarray:
    """Deterministic part ``c / max|c|`` of the cluster shape."""
    c = model.c
    return c / np.max(np.abs(c))


def q_sequence_linear(model: LinearModel, seed=None) -> Cluster:
    """Random cluster shape ``Theta * c / max|c|`` with ``P(Theta=1) = p``."""
    rng = np.random.default_rng(seed)
    sign = 1.0 if rng.random() < model.p else -1.0
    return Cluster(sign * q_shape_linear(model))


def spectral_tail_empirical(sample, u: float, m: int, min_exceedances: int = 100) -> np.ndarray:
    """Rows ``X_{i-m..i+m} / |X_i|`` for every ``|X_i| > u`` with a full window."""
    x = _values(sample)
    if m < 0:
        raise ParameterError("m must be nonnegative")
    idx = np.flatnonzero(np.abs(x) > u)
    idx = idx[(idx >= m) & (idx < x.size - m)]
    if idx.size < min_exceedances:
        raise DiagnosticError(f"only {idx.size} exceedances of u={u} (need {min_exceedances})")
    offsets = np.arange(-m, m + 1)
    rows = x[idx[:, None] + offsets]
    return rows / np.abs(x[idx])[:, None]


def simulate(model: Model, n: int, seed=None) -> SeriesSample:
    """Dispatch to the simulator matching ``model``."""
    if isinstance(model, RegVarLaw):
        return sample_regvar(model, n, seed)
    if isinstance(model, LinearModel):
        return simulate_linear(model, n, seed)
    if isinstance(model, GarchModel):
        return simulate_garch(model, n, seed=seed)
    raise ParameterError(f"unsupported model {type(model).__name__}")


def forward_spectral_linear(model: LinearModel) -> tuple[np.ndarray, np.ndarray]:
    """Finite law of the forward spectral tail ``(Theta_0, Theta_1, ...)``.

    With ``P(K = k)`` proportional to ``|c_k|**alpha`` and an independent
    sign ``Theta`` (positive with probability ``p``), the process is
    ``Theta_t = Theta * c_{t+K} / |c_K|``. Returns ``(weights, rows)`` where
    each row holds ``Theta_0, Theta_1, ...`` padded with zeros.
    """
    c = model.c
    w = np.abs(c) ** model.alpha
    w = w / w.sum()
    rows, weights = [], []
    for k in np.flatnonzero(c):
        fwd = np.zeros(c.size)
        tail = c[k:] / abs(c[k])
        fwd[:tail.size] = tail
        for sgn, ps in ((1.0, model.p), (-1.0, 1.0 - model.p)):
            if ps > 0:
                rows.append(sgn * fwd)
                weights.append(w[k] * ps)
    return np.array(weights), np.array(rows)
