import numpy as np
import pytest

from nsc.sampling import (
    LandmarkSplit,
    distance_matrix,
    maxmin_landmarks,
    random_landmarks,
    split_landmark_witness,
)


def test_maxmin_line_picks_far_end():
    pts = np.array([[0.0], [1.0], [10.0]])
    seed = next(s for s in range(100) if maxmin_landmarks(pts, 1, s)[0] == 0)
    assert list(maxmin_landmarks(pts, 2, seed)) == [0, 2]


def test_maxmin_full_is_permutation(rng):
    pts = rng.normal(size=(12, 3))
    assert sorted(maxmin_landmarks(pts, 12, 3)) == list(range(12))


def test_maxmin_single(rng):
    pts = rng.normal(size=(12, 3))
    out = maxmin_landmarks(pts, 1, 7)
    assert out.shape == (1,) and 0 <= out[0] < 12


def test_maxmin_greedy_property_brute_force(rng):
    pts = rng.normal(size=(40, 2))
    picks = maxmin_landmarks(pts, 15, 1)
    D = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    for k in range(1, len(picks)):
        prev = picks[:k]
        score = D[:, prev].min(axis=1)
        unpicked = np.setdiff1d(np.arange(40), prev)
        assert score[picks[k]] >= score[unpicked].max()


def test_maxmin_ties_go_to_lowest_index():
    # square corners: from corner 0, corners 1 and 2 lie at distance 1 and 3 at sqrt 2
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    seed = next(s for s in range(100) if maxmin_landmarks(pts, 1, s)[0] == 0)
    order = maxmin_landmarks(pts, 4, seed)
    assert list(order[:2]) == [0, 1]
    assert list(order[2:]) == [2, 3]


def test_maxmin_too_many():
    with pytest.raises(ValueError, match="insufficient points"):
        maxmin_landmarks(np.zeros((3, 2)), 4)


def test_random_landmarks():
    pts = np.zeros((9, 2))
    assert sorted(random_landmarks(pts, 9, 0)) == list(range(9))
    assert np.array_equal(random_landmarks(pts, 4, 5), random_landmarks(pts, 4, 5))
    assert random_landmarks(pts, 0, 1).size == 0
    with pytest.raises(ValueError):
        random_landmarks(pts, 10, 0)


@pytest.mark.parametrize("n,r,p,q", [(1000, 1.0, 500, 500), (3, 0.0, 3, 0), (10, 4.0, 2, 8), (3, 5.0, 2, 1)])
def test_split_sizes(rng, n, r, p, q):
    split = split_landmark_witness(rng.normal(size=(n, 2)), r, "maxmin", 0)
    assert (split.p, split.q) == (p, q)
    both = np.concatenate([split.landmark_indices, split.witness_indices])
    assert sorted(both) == list(range(n))


def test_split_degenerate_class():
    with pytest.raises(ValueError, match="degenerate class"):
        split_landmark_witness(np.zeros((1, 2)), 1.0)


def test_split_deterministic(rng):
    pts = rng.normal(size=(50, 2))
    for strategy in ("maxmin", "random"):
        a = split_landmark_witness(pts, 1.0, strategy, 4)
        b = split_landmark_witness(pts, 1.0, strategy, 4)
        assert np.array_equal(a.landmark_indices, b.landmark_indices)


def test_distance_matrix_pythagorean():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    D = distance_matrix(pts, LandmarkSplit(np.array([0]), np.array([1])))
    assert D.shape == (1, 1) and D[0, 0] == pytest.approx(5.0)


def test_distance_matrix_coincident_and_symmetric():
    pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    split = LandmarkSplit(np.array([0]), np.array([1, 2, 3]))
    D = distance_matrix(pts, split)
    assert D[0, 0] == 0.0 and D[0, 1] == D[0, 2] == 1.0
