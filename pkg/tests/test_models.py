import numpy as np
import pytest

from clusterlab.models import (DiagnosticError, GarchModel, LinearModel, ParameterError, RegVarLaw, SeriesSample,
                               forward_spectral_linear, hill_estimate, model_from_dict, q_sequence_linear,
                               q_shape_linear, quantile_an, sample_regvar, simulate, simulate_garch,
                               simulate_linear, spectral_tail_empirical, theta_linear)
from clusterlab.seqspace import Cluster


def within_3se(p_hat, p, n):
    return abs(p_hat - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_pareto_right_tail():
    x = sample_regvar(RegVarLaw(1.0, 1.0), 200000, seed=1).values
    assert np.all(x > 0)
    assert within_3se(np.mean(x > 2), 0.5, x.size)


def test_pareto_left_tail():
    x = sample_regvar(RegVarLaw(0.5, 0.0), 200000, seed=2).values
    assert np.all(x < 0)
    assert within_3se(np.mean(x < -4), 0.5, x.size)


def test_pareto_tail_grid():
    x = np.abs(sample_regvar(RegVarLaw(0.7, 0.5), 10**6, seed=3).values)
    for v in (1, 2, 4, 8):
        assert within_3se(np.mean(x > v), v ** -0.7, x.size) or v == 1
    assert np.min(x) >= 1.0


@pytest.mark.parametrize("alpha,p", [(0.0, 1.0), (-1.0, 0.5), (1.0, 1.5), (1.0, -0.1)])
def test_bad_law(alpha, p):
    with pytest.raises(ParameterError):
        RegVarLaw(alpha, p)


def test_regeneration_is_bit_identical():
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 0.5))
    a = simulate_linear(m, 1000, seed=42).values
    b = simulate_linear(m, 1000, seed=42).values
    assert a.tobytes() == b.tobytes()
    g = GarchModel(0.01, 0.1, 0.1)
    assert simulate_garch(g, 300, seed=5).values.tobytes() == simulate_garch(g, 300, seed=5).values.tobytes()


def test_quantile_an(oracles):
    assert quantile_an(RegVarLaw(1.0), 100) == pytest.approx(100.0)
    assert quantile_an(RegVarLaw(2.0), 4) == pytest.approx(2.0)
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7))
    assert quantile_an(m, 1000) == pytest.approx(oracles["quantile_an_linear_1_0.7_a0.7_n1000"], rel=1e-12)


def test_quantile_an_garch_requires_hint():
    with pytest.raises(ParameterError):
        quantile_an(GarchModel(0.01, 0.1, 0.1), 100)


def test_identity_filter():
    m = LinearModel((1.0,), RegVarLaw(0.7, 0.5))
    xi = np.arange(1.0, 11.0)
    assert np.array_equal(simulate_linear(m, 10, innovations=xi).values, xi)


def test_telescoping_filter():
    m = LinearModel((1.0, -1.0), RegVarLaw(1.0))
    assert np.all(simulate_linear(m, 50, innovations=3.0).values == 0.0)


def test_linear_uses_full_window():
    m = LinearModel((1.0, 0.5, 0.25), RegVarLaw(1.0))
    xi = np.arange(1.0, 8.0)
    x = simulate_linear(m, 5, innovations=xi).values
    expected = [xi[t + 2] + 0.5 * xi[t + 1] + 0.25 * xi[t] for t in range(5)]
    assert np.allclose(x, expected)


def test_linear_tail_equivalence():
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 1.0))
    n = 10**6
    x = np.abs(simulate_linear(m, n, seed=7).values)
    u0 = quantile_an(m.innovation, n) ** 0.5  # keep enough exceedances
    for u in (u0, 2 * u0):
        ratio = np.mean(x > u) / u ** -0.7
        assert ratio == pytest.approx(1 + 0.7 ** 0.7, rel=0.1)


def test_linear_model_validation():
    with pytest.raises(ParameterError):
        LinearModel((0.0, 0.0), RegVarLaw(1.0))
    with pytest.raises(ParameterError):
        LinearModel((0.0, 1.0), RegVarLaw(1.0))


def test_garch_degenerate_variance():
    g = GarchModel(2.0, 1e-9, 1e-9)
    x = simulate_garch(g, 20000, seed=3).values
    v = x.var()
    se = np.sqrt(np.var(x ** 2) / x.size)
    assert abs(v - 2.0) <= 3 * se


def test_garch_paper_parameters_run():
    x = simulate_garch(GarchModel(0.01, 1.45, 0.1), 50000, seed=4).values
    assert np.all(np.isfinite(x))
    # heavy tails: the Hill estimate sits well below the Gaussian regime
    assert hill_estimate(x, 500) < 2.0


def test_garch_hill_stable_across_seeds():
    g = GarchModel(0.01, 1.45, 0.1)
    h = [hill_estimate(simulate_garch(g, 100000, seed=s), 1000) for s in (11, 12)]
    assert abs(h[0] - h[1]) / np.mean(h) < 0.2


def test_hill_pareto():
    x = sample_regvar(RegVarLaw(1.0, 0.5), 10**5, seed=8)
    assert hill_estimate(x, 1000) == pytest.approx(1.0, abs=0.1)
    y = sample_regvar(RegVarLaw(0.5, 0.5), 10**5, seed=9)
    assert hill_estimate(y, 1000) == pytest.approx(0.5, abs=0.05)


def test_hill_errors():
    with pytest.raises(ParameterError):
        hill_estimate(np.ones(10), 10)
    with pytest.raises(DiagnosticError):
        hill_estimate(np.ones(100), 10)


def test_theta_linear(oracles):
    assert theta_linear(LinearModel((1.0,), RegVarLaw(1.0))) == 1.0
    assert theta_linear(LinearModel((1.0, -1.0), RegVarLaw(1.0))) == pytest.approx(oracles["theta_linear_1_-1_a1"])
    assert theta_linear(LinearModel((1.0, 0.7), RegVarLaw(0.7))) == pytest.approx(
        oracles["theta_linear_1_0.7_a0.7"], rel=1e-14)


def test_q_sequence_linear():
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 1.0))
    assert q_sequence_linear(m, seed=0) == Cluster([1.0, 0.7])
    assert q_sequence_linear(LinearModel((1.0,), RegVarLaw(1.0)), seed=0) == Cluster([1.0])
    q = q_sequence_linear(LinearModel((2.0, -1.0), RegVarLaw(1.0)), seed=0)
    assert q == Cluster([1.0, -0.5])
    assert q.sup_norm() == 1.0
    assert np.array_equal(q_shape_linear(LinearModel((2.0, -1.0), RegVarLaw(1.0))), [1.0, -0.5])


def test_q_sequence_sign_balance():
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 0.3))
    signs = [q_sequence_linear(m, seed=s).values[0] for s in range(2000)]
    assert within_3se(np.mean(np.array(signs) > 0), 0.3, 2000)


def test_spectral_tail_iid():
    x = sample_regvar(RegVarLaw(1.0, 0.5), 10**6, seed=10)
    rows = spectral_tail_empirical(x, 1000.0, 1)
    assert np.all(np.abs(rows[:, 1]) == 1.0)
    assert abs(rows[:, 2].mean()) < 3 * rows[:, 2].std() / np.sqrt(len(rows)) + 1e-3


def test_spectral_tail_ma1(oracles):
    m = LinearModel((1.0, 0.7), RegVarLaw(0.7, 1.0))
    x = simulate_linear(m, 10**6, seed=11)
    rows = spectral_tail_empirical(x, 10**4, 1)
    n = len(rows)
    # K = 0 (large innovation at lag 0): Theta_1 = c_1/|c_0| = 0.7; K = 1: Theta_1 = 0
    p_07 = np.mean(np.abs(rows[:, 2] - 0.7) < 0.05)
    p_00 = np.mean(np.abs(rows[:, 2]) < 0.05)
    assert within_3se(p_07, oracles["theta_linear_1_0.7_a0.7"], n)
    assert within_3se(p_00, oracles["spectral_P_K_eq_1"], n)
    assert np.all(np.abs(rows[:, 1]) == 1.0)


def test_spectral_tail_too_few():
    with pytest.raises(DiagnosticError):
        spectral_tail_empirical(np.ones(50), 0.5, 1)


def test_forward_spectral_linear():
    w, rows = forward_spectral_linear(LinearModel((1.0, 0.7), RegVarLaw(0.7, 1.0)))
    assert np.isclose(w.sum(), 1.0)
    assert np.allclose(np.abs(rows[:, 0]), 1.0)


def test_model_dict_roundtrip():
    for m in (RegVarLaw(0.7, 0.4), LinearModel((1.0, -0.7), RegVarLaw(1.5, 0.5)),
              GarchModel(0.01, 0.1, 0.2, 1.3)):
        assert model_from_dict(m.to_dict()) == m
    with pytest.raises(ParameterError):
        model_from_dict({"kind": "pareto", "alpha": 1.0, "bogus": 1})
    with pytest.raises(ParameterError):
        model_from_dict({"kind": "unknown"})


def test_series_csv_roundtrip():
    s = simulate(RegVarLaw(1.0), 20, seed=1)
    text = s.to_csv()
    assert text.splitlines()[0] == "x"
    assert np.array_equal(SeriesSample.from_csv(text).values, s.values)
