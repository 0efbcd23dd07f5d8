import itertools
import math

import numpy as np
import pytest

from cpdm.metric_core import InputError, RunContext, ball_count, validate_metric
from cpdm.spaces import (
    EuclideanSpace,
    ExplicitSpace,
    LayeredExampleSpace,
    SizeError,
    UniformDiscreteSpace,
    doubling_dimension_exact,
    generate_instance,
    load_matrix_file,
    load_points_csv,
    min_cover_size,
    packing_check,
)


def layered_table(n):
    """Distance table written out from the definition, for comparison."""
    labels = [("s", g) for g in range(n) for _ in range(n)] + [("q", g) for g in range(n)]
    size = len(labels)
    m = np.full((size, size), 2.0)
    for x, y in itertools.product(range(size), repeat=2):
        if x == y:
            m[x, y] = 0.0
        elif {labels[x][0], labels[y][0]} == {"s", "q"} and labels[x][1] == labels[y][1]:
            m[x, y] = 1.0
    return m


@pytest.mark.parametrize("n", range(1, 7))
def test_layered_table_exhaustive(n):
    space = LayeredExampleSpace(n)
    assert space.size == n * n + n
    np.testing.assert_array_equal(space.matrix(), layered_table(n))


def test_layered_size_20():
    assert LayeredExampleSpace(4).size == 20


@pytest.mark.parametrize("space", [
    UniformDiscreteSpace(9),
    LayeredExampleSpace(5),
    generate_instance("square-uniform", 64, 1),
    generate_instance("clustered", 64, 2),
    generate_instance("line-uniform", 64, 3),
], ids=["uniform", "layered", "square", "clustered", "line"])
def test_constructed_spaces_are_metric(space):
    assert validate_metric(space.matrix()) == []


@pytest.mark.parametrize("seed", range(100))
def test_explicit_random_is_metric(seed):
    space = generate_instance("explicit-random", 64, seed)
    assert validate_metric(space.matrix()) == []


@pytest.mark.parametrize("kind", ["line-uniform", "square-uniform", "clustered", "explicit-random"])
def test_generators_deterministic(kind):
    a = generate_instance(kind, 50, 9)
    b = generate_instance(kind, 50, 9)
    np.testing.assert_array_equal(a.matrix(), b.matrix())
    c = generate_instance(kind, 50, 10)
    assert not np.array_equal(a.matrix(), c.matrix())


def test_line_uniform_two_points():
    space = generate_instance("line-uniform", 2, 123)
    x, y = space.points[:, 0]
    assert x != y


def test_generator_errors():
    with pytest.raises(InputError):
        generate_instance("hexagonal", 10, 0)
    with pytest.raises(InputError):
        generate_instance("line-uniform", 1, 0)
    with pytest.raises(InputError):
        generate_instance("clustered", 10, 0, spread=-1)


def test_clustered_layout():
    space = generate_instance("clustered", 100, 4, spread=1e-4)
    m = space.matrix() + np.eye(100) * 10
    # ceil(sqrt(100)) = 10 tight clusters: nearest neighbours sit at the spread scale
    assert np.median(m.min(axis=1)) < 1e-3


def test_euclidean_rejects_duplicates():
    with pytest.raises(InputError, match="duplicate"):
        EuclideanSpace([[0, 0], [1, 1], [0, 0]])


def test_explicit_rejects_non_metric():
    with pytest.raises(InputError, match="symmetry"):
        ExplicitSpace([[0, 1], [2, 0]])


def test_min_cover_examples():
    uni = UniformDiscreteSpace(8)
    for p in range(8):
        assert min_cover_size(uni, None, p, 1.0) == 8
    lay = LayeredExampleSpace(4)
    for r in (1.0, 1.5, 1.999):
        assert min_cover_size(lay, None, lay.hub(2), r) == 5
    line = EuclideanSpace([[0.0], [1.0], [3.0]])
    assert min_cover_size(line, None, 1, 0.5) == 1


def test_min_cover_whole_layered_at_radius_two():
    # radius-1 balls around the hubs cover everything
    lay = LayeredExampleSpace(4)
    assert min_cover_size(lay, None, 0, 2.0) == 4


def test_min_cover_refuses_large():
    with pytest.raises(SizeError):
        min_cover_size(UniformDiscreteSpace(33), None, 0, 1.0)
    with pytest.raises(SizeError):
        doubling_dimension_exact(LayeredExampleSpace(6))


def test_dimension_closed_forms():
    assert doubling_dimension_exact(UniformDiscreteSpace(16)) == 4.0
    assert doubling_dimension_exact(UniformDiscreteSpace(1)) == 0.0
    lay = LayeredExampleSpace(4)
    assert abs(doubling_dimension_exact(lay) - math.log2(5)) <= 1e-12
    assert doubling_dimension_exact(lay, lay.groups_subset) == 4.0


@pytest.mark.parametrize("n", [2, 3, 5])
def test_layered_dimension_family(n):
    lay = LayeredExampleSpace(n)
    assert doubling_dimension_exact(lay) == pytest.approx(math.log2(n + 1), abs=1e-12)
    assert doubling_dimension_exact(lay, lay.groups_subset) == pytest.approx(2 * math.log2(n))


def _brute_cover(m, targets, centers, half):
    for k in range(1, len(targets) + 1):
        for combo in itertools.combinations(centers, k):
            if all(any(m[c, x] <= half for c in combo) for x in targets):
                return k


@pytest.mark.parametrize("seed", range(8))
def test_min_cover_matches_enumeration(seed):
    space = generate_instance("square-uniform", 9, seed)
    m = space.matrix()
    for p in range(9):
        for r in np.unique(m[p])[1:]:
            targets = [x for x in range(9) if m[p, x] <= r]
            assert min_cover_size(space, None, p, r) == _brute_cover(m, targets, range(9), r / 2)


@pytest.mark.parametrize("seed", range(12))
def test_subset_dimension_at_most_twice(seed):
    rng = np.random.default_rng(seed)
    space = generate_instance("explicit-random", 12, seed) if seed % 2 else \
        generate_instance("square-uniform", 12, seed)
    dim = doubling_dimension_exact(space)
    for _ in range(3):
        sub = np.sort(rng.choice(12, size=int(rng.integers(2, 12)), replace=False))
        assert doubling_dimension_exact(space, sub) <= 2 * dim + 1e-12


def test_packing_line_example():
    line = EuclideanSpace(np.arange(10.0))
    ball = ball_count(line, RunContext(), np.arange(10), 0, 4.5)
    assert ball == 5 and ball <= (4 * 4.5 / 1) ** 1
    assert packing_check(line, 1.0) is None


def test_packing_two_points():
    two = EuclideanSpace([[0.0], [1.0]])
    assert packing_check(two, 1.0) is None


def test_packing_uniform16():
    assert ball_count(UniformDiscreteSpace(16), RunContext(), np.arange(16), 0, 1.0) == 16
    assert packing_check(UniformDiscreteSpace(16), 4.0) is None


def test_packing_detects_low_d():
    v = packing_check(UniformDiscreteSpace(16), 1.0)
    assert v is not None and v.count == 16 and v.bound == 4.0


def test_load_points_csv(tmp_path):
    f = tmp_path / "pts.csv"
    f.write_text("0,0\n3,4\n10,0\n")
    space = load_points_csv(f)
    assert (space.size, space.dim) == (3, 2)
    f.write_text("0,0\n3\n")
    with pytest.raises(InputError, match="expected 2"):
        load_points_csv(f)
    f.write_text("0,0\nx,1\n")
    with pytest.raises(InputError):
        load_points_csv(f)
    with pytest.raises(InputError):
        load_points_csv(tmp_path / "missing.csv")


def test_load_matrix_file(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("3\n0 1 2\n1 0 1.5\n2 1.5 0\n")
    space = load_matrix_file(f)
    assert space.dist(1, 2) == 1.5
    f.write_text("3\n0 1 2\n1 0 1\n")
    with pytest.raises(InputError, match="header"):
        load_matrix_file(f)
    f.write_text("2\n0 1\n2 0\n")
    with pytest.raises(InputError, match="symmetry"):
        load_matrix_file(f)
