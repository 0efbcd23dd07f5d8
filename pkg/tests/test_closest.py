import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpdm.closest import base_threshold, closest_pair, closest_pair_audited, partition, t_of
from cpdm.metric_core import (
    AlgorithmConfig,
    InputError,
    InternalError,
    PreconditionError,
    RunContext,
    ball_count,
    brute_force_closest_pair,
)
from cpdm.spaces import EuclideanSpace, LayeredExampleSpace, UniformDiscreteSpace, generate_instance

from conftest import all_pairs_min


def test_base_threshold_values():
    assert base_threshold(1) == pytest.approx(86.985, abs=1e-3)
    assert base_threshold(2) == pytest.approx(3783.2, abs=0.1)
    assert base_threshold(3) == pytest.approx(1.645e5, rel=1e-3)


def test_t_of_examples():
    assert t_of(87, 1) == 1
    assert t_of(2000, 1) == 22
    assert t_of(10 ** 6, 2) == 16


def test_t_of_guard():
    with pytest.raises(InternalError):
        t_of(86, 1)


@settings(max_examples=300)
@given(st.integers(87, 10 ** 7), st.floats(1, 4))
def test_t_of_forms_agree(n, d):
    if n < base_threshold(d):
        return
    t = t_of(n, d)
    c = 2 * (4 * math.e) ** d
    assert t >= 1
    assert abs(t - 0.25 * (n / c) ** (1 / d)) < 1 + 1e-9


def test_partition_examples(ctx):
    line = EuclideanSpace([[0.0], [1.0], [2.5]])
    s1, s2, s3 = partition(line, ctx, np.arange(3), 0, 1.0, 1)
    assert (s1.tolist(), s2.tolist(), s3.tolist()) == ([0, 1], [], [2])
    s1, s2, s3 = partition(line, ctx, np.arange(3), 0, 10.0, 3)
    assert (s1.tolist(), s2.tolist(), s3.tolist()) == ([0, 1, 2], [], [])


def test_partition_preconditions(ctx, line013):
    with pytest.raises(PreconditionError):
        partition(line013, ctx, np.arange(3), 0, 0.0, 1)
    with pytest.raises(PreconditionError):
        partition(line013, ctx, np.arange(3), 0, 1.0, 0)


def test_partition_sizes_match_counts():
    space = generate_instance("square-uniform", 500, 3)
    ids = np.random.default_rng(0).permutation(500)
    ctx = RunContext()
    R, t = 0.21, 6
    s1, s2, s3 = partition(space, ctx, ids, 9, R, t)
    inner = ball_count(space, ctx, ids, 9, R)
    outer = ball_count(space, ctx, ids, 9, R * (1 + 1 / t))
    assert (s1.size, s2.size, s3.size) == (inner, outer - inner, 500 - outer)
    assert sorted(np.concatenate((s1, s2, s3)).tolist()) == list(range(500))
    # input order survives inside each part
    pos = {v: k for k, v in enumerate(ids)}
    for part in (s1, s2, s3):
        assert [pos[v] for v in part] == sorted(pos[v] for v in part)


def test_closest_pair_base_case_example():
    space = EuclideanSpace([[0, 0], [3, 4], [10, 0]])
    res = closest_pair(space, 3)
    assert (res.delta, res.pair) == (5.0, (0, 1))
    assert (res.stats.recursion_nodes, res.stats.base_cases) == (1, 1)
    assert res.stats.distance_calls == 3


def test_closest_pair_line_5000():
    space = generate_instance("line-uniform", 5000, 2)
    want = np.diff(np.sort(space.points[:, 0])).min()
    for seed in (0, 1, 2):
        res = closest_pair(space, 1, seed=seed)
        assert res.delta == want
        assert space.dist(*res.pair) == res.delta
        assert res.stats.base_cases > 1


def test_closest_pair_layered():
    space = LayeredExampleSpace(4)
    res = closest_pair(space, math.log2(5))
    assert res.delta == 1.0


def test_closest_pair_input_errors():
    with pytest.raises(InputError):
        closest_pair(EuclideanSpace([[0.0]]), 1)
    with pytest.raises(InputError):
        closest_pair(generate_instance("line-uniform", 10, 0), 0.5)
    with pytest.raises(InputError):
        closest_pair(generate_instance("line-uniform", 10, 0), 1, subset=[3])


def test_closest_pair_iteration_cap_propagates():
    from cpdm.metric_core import IterationCapError
    cfg = AlgorithmConfig(d=1, iteration_cap=3)
    with pytest.raises(IterationCapError):
        closest_pair(UniformDiscreteSpace(400), 1, config=cfg)


def test_audited_run_clean_and_shadow_separate():
    space = generate_instance("line-uniform", 3000, 4)
    plain = closest_pair(space, 1, seed=5)
    res, report = closest_pair_audited(space, 1, seed=5)
    assert res.stats.audit_violations == 0 and report.violations == []
    assert report.nodes and len(report.nodes) == res.stats.internal_nodes
    # auditing must not change what the algorithm does or what it is charged
    assert res.delta == plain.delta and res.pair == plain.pair
    assert res.stats == plain.stats


def test_audited_node_bounds_2_14():
    n = 2 ** 14
    space = generate_instance("line-uniform", n, 14)
    res, report = closest_pair_audited(space, 1, seed=0)
    c = 2 * 4 * math.e
    assert report.violations == []
    for rec in report.nodes:
        assert rec.n_left + rec.n_right <= rec.n + rec.n / rec.t
        assert rec.sizes[1] * rec.t <= rec.n
        if rec.n >= 8 * c:
            assert rec.n / rec.t <= 8 * c  # 8 c^(1/d) n^(1-1/d) at d = 1
        assert rec.width >= res.delta


def test_subset_runs_lemma5():
    space = generate_instance("line-uniform", 2500, 8)
    full, _ = brute_force_closest_pair(space, RunContext(), np.arange(2500))
    rng = np.random.default_rng(1)
    for k in range(10):
        sub = rng.choice(2500, size=int(rng.integers(2, 2500)), replace=False)
        res = closest_pair(space, 1, seed=k, subset=sub)
        sub_delta, _ = brute_force_closest_pair(space, RunContext(), sub)
        assert res.delta >= full
        assert res.delta == sub_delta
        assert set(res.pair) <= set(sub.tolist())


def test_children_strictly_shrink():
    space = generate_instance("line-uniform", 4000, 1)
    _, report = closest_pair_audited(space, 1, seed=2)
    assert all(r.n_left <= r.n - 2 and r.n_right <= r.n - 2 for r in report.nodes)


def test_determinism():
    space = generate_instance("line-uniform", 6000, 3)
    a = closest_pair(space, 1, seed=99)
    b = closest_pair(space, 1, seed=99)
    assert a == b
    c = closest_pair(space, 1, seed=100)
    assert c.delta == a.delta


def test_witness_tie_prefers_first_child():
    # all gaps equal: every leaf reports delta 1; the first leaf in DFS order wins
    space = EuclideanSpace(np.arange(400, dtype=float))
    res = closest_pair(space, 1, seed=0)
    assert res.delta == 1.0
    assert space.dist(*res.pair) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=2, max_size=400, unique=True),
       st.integers(0, 2 ** 32))
def test_matches_oracle_on_integer_lines(xs, seed):
    space = EuclideanSpace(np.array(xs, dtype=float))
    res, report = closest_pair_audited(space, 1, seed=seed)
    assert res.delta == np.diff(np.sort(xs)).min()
    assert report.violations == []


@pytest.mark.parametrize("seed", range(5))
def test_matches_double_loop_small(seed):
    space = generate_instance("square-uniform", 60, seed)
    assert closest_pair(space, 3, seed=seed).delta == all_pairs_min(space)
