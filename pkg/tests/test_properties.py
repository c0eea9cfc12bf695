import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterlab.espace import (DecoratedPath, GraphSet, PiecewiseLinear, StepPath, add_continuous, embed_cadlag,
                               graph, hausdorff_graphs, local_max, m2_distance, sup_path, uniform_metric)
from clusterlab.limitpp import FiniteQ, LimitPointProcess
from clusterlab.records import cluster_records
from clusterlab.seqspace import Cluster, polar, shift_metric, truncate
from clusterlab.sums import limit_decorated_path, m2_condition_check

coord = st.floats(-5, 5, allow_nan=False, allow_infinity=False).map(lambda v: round(v, 3))
seqs = st.lists(coord, min_size=0, max_size=6)
nonzero_seqs = seqs.filter(lambda v: any(v))
pos_seqs = st.lists(st.floats(0, 5, allow_nan=False).map(lambda v: round(v, 3)), min_size=0, max_size=6)


@st.composite
def step_paths(draw, max_jumps=4):
    k = draw(st.integers(0, max_jumps))
    ticks = draw(st.lists(st.integers(1, 100), min_size=k, max_size=k, unique=True))
    times = np.sort(np.array(ticks, float)) / 100
    values = draw(st.lists(coord, min_size=k + 1, max_size=k + 1))
    return StepPath(times, values)


@st.composite
def decorated_paths(draw):
    step = draw(step_paths())
    ticks = draw(st.lists(st.integers(0, 100), max_size=2, unique=True))
    dec = []
    for t in np.array(ticks, float) / 100:
        a, b = float(step.left_limit(t)), float(step(t))
        lo = min(a, b) - draw(st.floats(0, 2))
        hi = max(a, b) + draw(st.floats(0, 2))
        dec.append((t, lo, hi))
    return DecoratedPath(step, dec)


# shift metric -----------------------------------------------------------------------


@given(seqs, seqs, seqs)
def test_shift_metric_axioms(a, b, c):
    ab, ba = shift_metric(a, b), shift_metric(b, a)
    assert ab == ba and ab >= 0
    assert shift_metric(a, c) <= ab + shift_metric(b, c) + 1e-12
    assert (ab == 0) == (Cluster(a) == Cluster(b))


@given(seqs, seqs, st.integers(-20, 20))
def test_shift_invariance(a, b, k):
    assert shift_metric(Cluster(a).shift(k), b) == shift_metric(a, b)


@given(seqs, st.floats(0.01, 6), st.floats(0.01, 6))
def test_truncate_monotone(a, z1, z2):
    z1, z2 = min(z1, z2), max(z1, z2)
    assert truncate(a, z2).sup_norm() <= truncate(a, z1).sup_norm()
    assert shift_metric(a, truncate(a, z1)) <= z1


@given(nonzero_seqs)
def test_polar_round_trip(a):
    r, s = polar(a)
    assert abs(s.sup_norm() - 1.0) <= 1e-12
    assert np.allclose(r * s.values, Cluster(a).values, atol=1e-12, rtol=0)


# graph metric -----------------------------------------------------------------------


@settings(max_examples=25)
@given(step_paths(3), step_paths(3), step_paths(3))
def test_hausdorff_axioms(a, b, c):
    ga, gb, gc = (graph(embed_cadlag(p)) for p in (a, b, c))
    ab = hausdorff_graphs(ga, gb)
    assert ab == hausdorff_graphs(gb, ga)
    assert hausdorff_graphs(ga, gc) <= ab + hausdorff_graphs(gb, gc) + 1e-9
    assert hausdorff_graphs(ga, ga) == 0.0


@settings(max_examples=40)
@given(decorated_paths(), decorated_paths())
def test_m2_below_uniform(p, q):
    assert m2_distance(p, q) <= uniform_metric(p, q) + 1e-12


@given(step_paths())
def test_embedding_matches_completed_graph(s):
    # completed graph: horizontal pieces plus a vertical segment per jump
    br = np.concatenate([[0.0], s.times, [1.0]])
    segs = [(br[i], s.values[i], br[i + 1], s.values[i]) for i in range(br.size - 1) if br[i + 1] > br[i]]
    segs += [(t, min(a, b), t, max(a, b)) for t, a, b in zip(s.times, s.values[:-1], s.values[1:]) if a != b]
    if not segs:
        segs = [(0.0, s.values[0], 1.0, s.values[0])]
    assert hausdorff_graphs(graph(embed_cadlag(s)), GraphSet(segs)) == 0.0


@given(decorated_paths())
def test_local_max_equals_graph_top(p):
    assert local_max(p, 0.0, 1.0) == graph(p).zmax()


@given(decorated_paths())
def test_sup_path_monotone_and_dominating(p):
    s = sup_path(p)
    assert np.all(np.diff(s.values) >= 0)
    grid = np.linspace(0, 1, 101)
    assert np.all(s(grid) >= p(grid))
    assert s(1.0) == local_max(p, 0.0, 1.0)


@settings(max_examples=30)
@given(decorated_paths(), st.lists(coord, min_size=3, max_size=3), st.integers(1, 20),
       st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_addition_continuity(p, bv, k, noise):
    b = PiecewiseLinear((0.0, 0.5, 1.0), bv)
    knots = (0.0, 0.3, 0.7, 1.0)
    bk = PiecewiseLinear(knots, b(knots) + np.array(noise) / k)
    assert m2_distance(add_continuous(p, bk), add_continuous(p, b)) <= b.sup_distance(bk) + 1e-9


# records ---------------------------------------------------------------------------


@given(pos_seqs, st.floats(0, 6), st.floats(0, 6))
def test_records_nonincreasing_in_threshold(x, y1, y2):
    y1, y2 = min(y1, y2), max(y1, y2)
    assert cluster_records(x, y2) <= cluster_records(x, y1)


@given(pos_seqs, st.floats(0, 6), st.integers(0, 5), st.integers(0, 5))
def test_records_ignore_padding(x, y, lead, trail):
    assert cluster_records([0.0] * lead + list(x) + [0.0] * trail, y) == cluster_records(x, y)


# limit paths -----------------------------------------------------------------------


@st.composite
def limit_pps(draw):
    width = draw(st.integers(1, 3))
    k = draw(st.integers(0, 5))
    rows = []
    for _ in range(k):
        r = np.array(draw(st.lists(st.floats(-1, 1), min_size=width, max_size=width)))
        r[draw(st.integers(0, width - 1))] = draw(st.sampled_from([1.0, -1.0]))
        rows.append(r)
    Q = np.array(rows).reshape(k, width)
    T = np.sort(np.array(draw(st.lists(st.integers(1, 1000), min_size=k, max_size=k, unique=True)), float)) / 1000
    P = np.array(draw(st.lists(st.floats(0.1, 10), min_size=k, max_size=k)))
    return LimitPointProcess(T, P, Q, 1.0, 0.5, 0.1)


@given(limit_pps())
def test_limit_decorations_contain_both_values(pp):
    p = limit_decorated_path(pp, 0.5)
    a, b = p.step.left_limit(p.dec_t), p.step(p.dec_t)
    assert np.all(p.dec_lo <= np.minimum(a, b) + 1e-12)
    assert np.all(p.dec_hi >= np.maximum(a, b) - 1e-12)


@given(limit_pps())
def test_m2_condition_gives_jump_decorations(pp):
    frac, ok = m2_condition_check(pp.Q)
    p = limit_decorated_path(pp, 0.5)
    a, b = p.step.left_limit(p.dec_t), p.step(p.dec_t)
    for i, good in enumerate(ok):
        if good:
            assert np.isclose(p.dec_lo[i], min(a[i], b[i]), atol=1e-9)
            assert np.isclose(p.dec_hi[i], max(a[i], b[i]), atol=1e-9)


@given(limit_pps(), st.floats(0.1, 10))
def test_scale_equivariance(pp, lam):
    a = limit_decorated_path(pp, 0.5)
    b = limit_decorated_path(LimitPointProcess(pp.T, lam * pp.P, pp.Q, 1.0, 0.5, 0.1), 0.5)
    assert np.allclose(b.step.values, lam * a.step.values, rtol=1e-12, atol=1e-12)
    assert np.allclose(b.decorations()[:, 1:], lam * a.decorations()[:, 1:], rtol=1e-12, atol=1e-12)


@settings(max_examples=30)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4))
def test_finite_q_samples_unit_norm(row):
    row = np.array(row) / max(row)
    q = FiniteQ([row])
    s = q.sample(5, np.random.default_rng(0))
    assert np.allclose(np.max(np.abs(s), axis=1), 1.0)
