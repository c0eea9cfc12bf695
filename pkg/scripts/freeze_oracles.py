"""Freeze closed-form targets used by the test suite.

Every value is computed here with mpmath from its defining formula, without
importing clusterlab, so the tests compare the package against an
independent evaluation. Output: tests/data/oracles.json.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40


def linear_theta(c, a):
    w = [abs(mp.mpf(x)) ** a for x in c]
    return max(w) / sum(w)


def linear_stable(c, a, p):
    """Q-route parameters for the shape +-c/max|c| with sign balance p."""
    c = [mp.mpf(x) for x in c]
    a = mp.mpf(a)
    p = mp.mpf(p)
    th = linear_theta(c, a)
    m = max(abs(x) for x in c)
    q = [x / m for x in c]
    s = sum(q)
    sig_a = th * abs(s) ** a
    beta = (2 * p - 1) * mp.sign(s) if s != 0 else mp.mpf(0)
    sgn = lambda x: mp.sign(x) * abs(x) ** a
    if a < 1:
        b = mp.mpf(0)
    elif a > 1:
        b = a / (a - 1) * th * (2 * p - 1) * sum(sgn(x) for x in q)
    else:
        c0 = 1 - mp.euler
        xlog = lambda x: x * mp.log(abs(x)) if x != 0 else mp.mpf(0)
        b = th * (2 * p - 1) * (c0 * s - xlog(s) + sum(xlog(x) for x in q))
    return {"sigma": sig_a ** (1 / a), "beta": beta, "b": b}


def c0_integral():
    head = mp.quad(lambda y: (mp.sin(y) - y) / y**2, [0, 1])
    tail = mp.quadosc(lambda y: mp.sin(y) / y**2, [1, mp.inf], omega=1)
    return head + tail


out = {
    "quantile_an_linear_1_0.7_a0.7_n1000": (1000 * (1 + mp.mpf("0.7") ** mp.mpf("0.7"))) ** (1 / mp.mpf("0.7")),
    "theta_linear_1_0.7_a0.7": linear_theta([1, "0.7"], mp.mpf("0.7")),
    "theta_linear_1_-1_a1": linear_theta([1, -1], 1),
    "theta_linear_1_1_a1": linear_theta([1, 1], 1),
    "spectral_P_K_eq_1": mp.mpf("0.7") ** mp.mpf("0.7") / (1 + mp.mpf("0.7") ** mp.mpf("0.7")),
    "c0_quad": c0_integral(),
    "c0_closed": 1 - mp.euler,
    "sigma_alpha_linear_1_0.7_a0.7": mp.mpf("1.7") ** mp.mpf("0.7") / (1 + mp.mpf("0.7") ** mp.mpf("0.7")),
    "pareto_trunc_mean_a1.5_n1e4": None,
    "nu_sup_times_ind_a2": mp.quad(lambda y: y * 2 * y ** -3, [1, mp.inf]),
    "harmonic_1e5": mp.harmonic(100000),
    "karamata_a0.7": {str(e): mp.mpf("0.7") * mp.mpf(e) ** mp.mpf("0.3") / mp.mpf("0.3") for e in ("0.1", "0.5")},
    "stable_linear": {},
}
# analytic truncated mean E[(X/a_n) 1{|X| <= a_n}] for Pareto alpha=1.5, p=1 at a_n = 1e4^(1/1.5)
an = mp.mpf(10000) ** (1 / mp.mpf("1.5"))
out["pareto_trunc_mean_a1.5_n1e4"] = {"a_n": an,
                                       "value": mp.quad(lambda x: x * mp.mpf("1.5") * x ** mp.mpf("-2.5"), [1, an]) / an}
for a in ("0.5", "0.7", "1.0", "1.5"):
    for c in ((1, "0.7"), (1, "-0.7")):
        for p in ("1", "0.5", "0.8"):
            key = f"c={c[0]},{c[1]};a={a};p={p}"
            out["stable_linear"][key] = linear_stable(c, mp.mpf(a), p)


def plain(v):
    if isinstance(v, dict):
        return {k: plain(x) for k, x in v.items()}
    return float(v)


path = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"
path.write_text(json.dumps(plain(out), indent=2, sort_keys=True) + "\n")
print(f"wrote {path}")
