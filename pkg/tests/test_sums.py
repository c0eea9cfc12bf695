import numpy as np
import pytest
from scipy import integrate

from clusterlab.espace import local_max
from clusterlab.limitpp import FiniteQ, LimitPointProcess, LinearQ, PointQ, sample_limit_pp
from clusterlab.models import LinearModel, ParameterError, RegVarLaw, SeriesSample, sample_regvar, theta_linear
from clusterlab.seqspace import Cluster
from clusterlab.sums import (CenteringSpec, LinearForwardTheta, block_decorated_path, c0, c0_quadrature,
                             c0_series, centered_path, centering_drift, karamata_check, limit_decorated_path,
                             limit_path_sampler, m2_condition_check, m2_distribution_experiment,
                             marginal_tail_balance, partial_sum_path, small_jump_diagnostic,
                             stable_params_from_forward_theta, stable_params_from_Q, sup_law_experiment,
                             truncated_mean, window_max_gap)


def make_pp(T, P, Q, alpha=0.5, p_min=0.1):
    return LimitPointProcess(np.asarray(T, float), np.asarray(P, float), np.atleast_2d(np.asarray(Q, float)),
                             1.0, alpha, p_min)


def test_c0_two_schemes(oracles):
    assert abs(c0_quadrature() - c0_series()) < 1e-8
    assert c0() == pytest.approx(oracles["c0_quad"], abs=1e-10)
    assert c0() == pytest.approx(1 - np.euler_gamma, abs=1e-10)


def test_partial_sum_path():
    assert partial_sum_path(np.zeros(5), 1.0).values.tolist() == [0.0] * 6
    p = partial_sum_path(np.array([4.0, 0, 0, 0]), 4.0)
    assert p(0.2) == 0.0 and p(0.25) == 1.0 and p.left_limit(0.25) == 0.0
    x = np.random.default_rng(0).normal(size=50)
    p = partial_sum_path(x, 2.0)
    i = np.arange(1, 51)
    assert np.allclose(p(i / 50), np.cumsum(x) / 2.0)
    with pytest.raises(ParameterError):
        partial_sum_path(x, 0.0)


def test_centering_modes():
    x = sample_regvar(RegVarLaw(0.7), 100, seed=1)
    assert np.array_equal(centered_path(x, 10.0, CenteringSpec()).values, partial_sum_path(x, 10.0).values)
    assert truncated_mean(None, 50.0, law=RegVarLaw(1.5, 0.5)) == 0.0
    with pytest.raises(ParameterError):
        CenteringSpec("truncated-mean")
    with pytest.raises(ParameterError):
        CenteringSpec("bogus")


def test_pareto_truncated_mean_matches_quadrature(oracles):
    o = oracles["pareto_trunc_mean_a1.5_n1e4"]
    a_n = 1e4 ** (1 / 1.5)
    assert a_n == pytest.approx(o["a_n"])
    analytic = truncated_mean(None, a_n, law=RegVarLaw(1.5, 1.0))
    quad = integrate.quad(lambda x: x * 1.5 * x ** -2.5, 1.0, a_n, epsabs=1e-14)[0] / a_n
    assert abs(analytic - quad) < 1e-8
    assert analytic == pytest.approx(o["value"], rel=1e-10)


def test_centered_path_subtracts_linear_drift():
    x = sample_regvar(RegVarLaw(1.5, 1.0), 2000, seed=2)
    a_n = 2000 ** (1 / 1.5)
    m = truncated_mean(x, a_n)
    v = centered_path(x, a_n, CenteringSpec("truncated-mean", 1.0))
    s = partial_sum_path(x, a_n)
    k = np.arange(2001)
    assert np.allclose(v.values, s.values - k * m)
    with pytest.warns(RuntimeWarning):
        centered_path(x.values[:100], a_n, CenteringSpec("truncated-mean", 1.0, "plugin"))


def test_limit_path_single_point():
    p = limit_decorated_path(make_pp([0.5], [1.0], [[1.0]]), 0.5)
    assert p(0.5) == 1.0 and p.left_limit(0.5) == 0.0
    assert p.decorations().tolist() == [[0.5, 0.0, 1.0]]


def test_limit_path_cancelling_shape():
    p = limit_decorated_path(make_pp([0.3], [2.0], [[1.0, -1.0]]), 0.5)
    assert np.all(p.step.values == 0.0)
    assert p.decorations().tolist() == [[0.3, 0.0, 2.0]]


def test_limit_path_empty():
    p = limit_decorated_path(make_pp([], [], np.zeros((0, 1))), 0.5)
    assert p.dec_t.size == 0 and p(1.0) == 0.0


def test_limit_path_anchored_at_left_limit():
    p = limit_decorated_path(make_pp([0.2, 0.6], [1.0, 0.5], [[1.0, -0.7], [-1.0, 0.7]]), 0.5)
    d = p.decorations()
    assert d[0].tolist() == pytest.approx([0.2, 0.0, 1.0])
    assert d[1].tolist() == pytest.approx([0.6, 0.3 - 0.5, 0.3])


def test_limit_path_alpha_ge_1_requires_matching_floor():
    pp = make_pp([0.5], [1.0], [[1.0]], alpha=1.5, p_min=0.1)
    with pytest.raises(ParameterError):
        limit_decorated_path(pp, 1.5)
    with pytest.raises(ParameterError):
        limit_decorated_path(pp, 1.5, CenteringSpec("truncated-mean", 0.2, tail_balance=1.0))
    p = limit_decorated_path(pp, 1.5, CenteringSpec("truncated-mean", 0.1, tail_balance=1.0))
    m = centering_drift(1.5, 0.1, 1.0)
    assert m == pytest.approx(3.0 * (0.1 ** -0.5 - 1.0))
    assert p(1.0) == pytest.approx(1.0 - m)


def test_centering_drift_symmetric_is_zero():
    assert centering_drift(1.0, 0.01, 0.5) == 0.0
    assert centering_drift(1.0, np.e ** -2, 1.0) == pytest.approx(2.0)


def test_marginal_tail_balance():
    assert marginal_tail_balance(RegVarLaw(1.0, 0.3)) == 0.3
    m = LinearModel((1.0, -1.0), RegVarLaw(1.0, 1.0))
    assert marginal_tail_balance(m) == pytest.approx(0.5)


def test_block_decorated_path():
    x = np.array([1.0, -1.0, 0, 0, 2.0, 0])
    p = block_decorated_path(x, 2, 1.0)
    assert p.decorations().tolist() == [[1 / 3, 0.0, 1.0], [1.0, 0.0, 2.0]]


def test_stable_degenerate_Q():
    for a in (0.5, 1.0, 1.5):
        sp = stable_params_from_Q(a, 1.0, PointQ(1.0), p=1.0)
        assert sp.sigma == pytest.approx(1.0) and sp.beta == pytest.approx(1.0)
        assert abs(sp.extra["balance_residual"]) < 1e-12
    assert stable_params_from_Q(0.5, 1.0, PointQ(1.0)).b == 0.0
    assert stable_params_from_Q(1.5, 1.0, PointQ(1.0)).b == pytest.approx(3.0)
    assert stable_params_from_Q(1.0, 1.0, PointQ(1.0)).b == pytest.approx(c0())


def test_stable_linear_exact(oracles):
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 1.0))
    sp = stable_params_from_Q(0.7, theta_linear(m), LinearQ(m))
    assert sp.sigma ** 0.7 == pytest.approx(1.7 ** 0.7 / (1 + 0.7 ** 0.7), rel=1e-12)
    assert sp.sigma ** 0.7 == pytest.approx(oracles["sigma_alpha_linear_1_0.7_a0.7"], rel=1e-12)
    m = LinearModel((1.0, -1.0), RegVarLaw(1.0, 0.5))
    assert stable_params_from_Q(1.0, theta_linear(m), LinearQ(m)).sigma == 0.0


def test_stable_params_match_oracle_table(oracles):
    for key, ref in oracles["stable_linear"].items():
        c, a, p = key.split(";")
        coeffs = tuple(float(v) for v in c[2:].split(","))
        alpha, p = float(a[2:]), float(p[2:])
        m = LinearModel(coeffs, RegVarLaw(alpha, p))
        for sp in (stable_params_from_Q(alpha, theta_linear(m), LinearQ(m)),
                   stable_params_from_forward_theta(alpha, LinearForwardTheta(m))):
            assert sp.sigma == pytest.approx(ref["sigma"], abs=1e-12), key
            assert sp.beta == pytest.approx(ref["beta"], abs=1e-12), key
            assert sp.b == pytest.approx(ref["b"], abs=1e-10), key


def test_stable_monte_carlo_routes_agree():
    m = LinearModel((1.0, -0.7), RegVarLaw(1.5, 0.8))
    q = stable_params_from_Q(1.5, theta_linear(m), LinearQ(m), p=marginal_tail_balance(m),
                             mc_samples=50000, seed=1, exact=False)
    f = stable_params_from_forward_theta(1.5, LinearForwardTheta(m), mc_samples=50000, seed=2, exact=False)
    for k in ("sigma", "beta", "b"):
        se = np.hypot(q.se[k], f.se[k])
        assert abs(getattr(q, k) - getattr(f, k)) < 3 * se + 1e-12
    assert abs(q.extra["balance_residual"]) < 3 * q.extra["balance_se"] + 1e-12


def test_forward_iid_and_positive():
    fwd = FiniteQ([[1.0]])
    assert stable_params_from_forward_theta(0.8, fwd).sigma == pytest.approx(1.0)
    pos = FiniteQ([[1.0, 0.5, 0.25], [1.0, 0.0, 0.0]], [0.5, 0.5])
    assert stable_params_from_forward_theta(1.2, pos).beta == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        stable_params_from_forward_theta(1.2, FiniteQ([[0.5, 1.0]]))


def test_m2_condition_examples():
    assert m2_condition_check([Cluster([1.0, 0.7])])[1] == [True]
    assert m2_condition_check([Cluster([1.0, -0.7])])[1] == [False]
    assert m2_condition_check([Cluster([-1.0])])[1] == [True]
    frac, flags = m2_condition_check([Cluster([1.0, 0.7]), Cluster([1.0, -0.7])])
    assert frac == 0.5 and flags == [True, False]


def test_m2_condition_gives_cadlag_decorations():
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 0.5))
    pp = sample_limit_pp(theta_linear(m), 0.7, LinearQ(m), 0.05, seed=3)
    p = limit_decorated_path(pp, 0.7)
    a, b = p.step.left_limit(p.dec_t), p.step(p.dec_t)
    assert np.allclose(p.dec_lo, np.minimum(a, b)) and np.allclose(p.dec_hi, np.maximum(a, b))


def test_small_jump_diagnostic():
    x = np.array([5.0, -6.0, 7.0])
    out = small_jump_diagnostic(SeriesSample(x), 1.0, [0.5], law=None)
    assert out[0.5] == 0.0
    x = sample_regvar(RegVarLaw(1.5, 0.5), 10**5, seed=4)
    a_n = 10**5 ** (1 / 1.5)
    prof = small_jump_diagnostic(x, a_n, [0.5, 0.2, 0.1, 0.05])
    vals = list(prof.values())
    assert vals[-1] < vals[0]


def test_karamata_finite_n(oracles):
    rows = karamata_check(0.7, 10**6, [0.1, 0.5], 10**6, seed=5)
    for r in rows:
        assert abs(r["mc"] - r["exact"]) < 3 * r["se"]
        assert r["limit"] == pytest.approx(oracles["karamata_a0.7"][repr(r["epsilon"])], rel=1e-12)
        assert abs(r["exact"] - r["limit"]) < 0.01


def test_limit_path_sampler_scale_and_drift():
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 1.0))
    p = limit_path_sampler(m, 1e-3)(np.random.SeedSequence(6))
    assert p.drift is not None and p.drift(1.0) > 0
    with pytest.raises(ParameterError):
        limit_path_sampler(LinearModel((1.0,), RegVarLaw(1.5)))


def test_scale_equivariance():
    pp = sample_limit_pp(1.0, 0.6, LinearQ(LinearModel((1.0, -0.5), RegVarLaw(0.6, 0.5))), 0.05, seed=7)
    a = limit_decorated_path(pp, 0.6)
    pp2 = LimitPointProcess(pp.T, 3.0 * pp.P, pp.Q, pp.theta, pp.alpha, pp.p_min)
    b = limit_decorated_path(pp2, 0.6)
    assert np.allclose(b.step.values, 3.0 * a.step.values)
    assert np.allclose(b.decorations()[:, 1:], 3.0 * a.decorations()[:, 1:])


def test_window_max_gap_atom_aware():
    lim = np.concatenate([np.zeros(500), np.linspace(0.1, 1, 500)])
    emp = np.concatenate([np.full(500, 1e-6), np.linspace(0.1, 1, 500)])
    assert window_max_gap(emp, lim) < 0.01
    assert window_max_gap(lim + 1.0, lim) > 0.4


def test_sup_law_experiment_small():
    assert sup_law_experiment(RegVarLaw(0.7, 1.0), [100], 0)["rows"] == []
    rep = sup_law_experiment(RegVarLaw(0.7, 1.0), [1000], 400, seed=8, limit_draws=2000, tol=0.1)
    assert rep["rows"][0]["ks"] < 0.1


def test_sup_law_iid_monotone_collapse():
    # positive summands: sup over [0, 1] is the endpoint value
    draw = limit_path_sampler(RegVarLaw(0.7, 1.0), 1e-3)
    for s in np.random.SeedSequence(9).spawn(20):
        p = draw(s)
        assert local_max(p, 0.0, 1.0) == pytest.approx(p(1.0))


def test_m2_distribution_experiment_small():
    m = LinearModel((1.0, -0.7), RegVarLaw(0.7, 1.0))
    rep = m2_distribution_experiment(m, [100, 1000], 300, seed=10, limit_draws=1000, tol=0.2)
    assert len(rep["rows"]) == 2 and rep["final_gap"] < 0.2
