import numpy as np
import pytest

from nsc.prime import PrimeComplex
from nsc.projection import (
    ComplexIndex,
    DegenerateSimplexError,
    MetricMatrix,
    affine_lambdas,
    brute_force_complex_distance,
    clamp_and_project,
    point_complex_distance,
    point_simplex_distance,
)

from oracles import diameter2, lattice_simplex_distance, random_simplex_pair, sampled_simplex_distance


def complex_of(V, simplices, label=0):
    V = np.asarray(V, dtype=float)
    by_dim = {}
    for s in simplices:
        by_dim.setdefault(len(s) - 1, []).append(sorted(s))
    top = max(by_dim)
    layers = tuple(
        np.array(by_dim.get(k, []), dtype=np.int64).reshape(-1, k + 1) for k in range(top + 1)
    )
    return PrimeComplex(label, V, layers, 0.0)


class TestAffine:
    def test_vertex(self):
        V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(affine_lambdas(V[0], V), [1, 0, 0])

    def test_midpoint(self):
        V = np.array([[0.0, 0.0, 1.0], [2.0, 2.0, 3.0]])
        assert np.allclose(affine_lambdas(V.mean(axis=0), V), [0.5, 0.5])

    def test_orthogonal_drop(self):
        V = np.array([[0.0, 0.0], [1.0, 0.0]])
        x = np.array([0.3, 5.0])
        lam = affine_lambdas(x, V)
        assert np.allclose(lam, [0.7, 0.3])
        res = clamp_and_project(x, V)
        assert np.allclose(res.position, [0.3, 0.0])
        assert point_simplex_distance(x, V)[0] == pytest.approx(sampled_simplex_distance(x, V), abs=1e-3)

    def test_residual_orthogonal_to_hull(self, rng):
        V = rng.normal(size=(3, 5))
        x = rng.normal(size=5)
        lam = affine_lambdas(x, V)
        assert lam.sum() == pytest.approx(1.0, abs=1e-9)
        r = x - lam @ V
        assert np.allclose((V[1:] - V[0]) @ r, 0.0, atol=1e-9)

    def test_degenerate(self):
        V = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(DegenerateSimplexError, match="degenerate simplex"):
            affine_lambdas(np.zeros(2), V)


class TestClamp:
    EDGE = np.array([[0.0, 0.0], [1.0, 0.0]])

    def test_far_vertex(self):
        res = clamp_and_project(np.array([2.0, 0.0]), self.EDGE)
        assert np.allclose(res.position, [1.0, 0.0]) and res.clamped

    def test_gamma_extension(self):
        d, res = point_simplex_distance(np.array([3.0, 0.0]), self.EDGE, gamma=1.0)
        assert np.allclose(res.position, [2.0, 0.0]) and d == pytest.approx(1.0)

    def test_gamma_extension_backwards(self):
        res = clamp_and_project(np.array([-3.0, 1.0]), self.EDGE, gamma=0.5)
        assert np.allclose(res.position, [-0.5, 0.0])

    def test_above_centroid(self):
        V = np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
        x = V.mean(axis=0) + [0.0, 0.0, 2.0]
        d, res = point_simplex_distance(x, V)
        assert np.allclose(res.position, V.mean(axis=0)) and not res.clamped
        assert d == pytest.approx(4.0)
        assert np.allclose(res.lambdas, 1 / 3)

    def test_unclamped_position_is_affine_combination(self, rng):
        for _ in range(50):
            V = rng.normal(size=(3, 4))
            lam = rng.dirichlet(np.ones(3))
            x = lam @ V + 1e-3 * rng.normal(size=4)
            res = clamp_and_project(x, V)
            if not res.clamped:
                assert np.allclose(res.position, res.lambdas @ V, atol=1e-9)
                assert res.lambdas.sum() == pytest.approx(1.0, abs=1e-9)
                assert np.all((res.lambdas >= 0) & (res.lambdas <= 1))

    def test_degenerate_triangle_uses_faces(self):
        V = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        d, _ = point_simplex_distance(np.array([1.5, 1.0]), V)
        assert d == pytest.approx(1.0)

    def test_negative_gamma(self):
        with pytest.raises(ValueError):
            clamp_and_project(np.zeros(2), self.EDGE, -0.1)


class TestMetric:
    def test_identity_is_euclidean(self, rng):
        x, V = np.array([0.2, 0.9, -1.0]), rng.normal(size=(3, 3))
        d_none = point_simplex_distance(x, V)[0]
        d_eye = point_simplex_distance(x, V, A=np.eye(3))[0]
        res = clamp_and_project(x, V)
        assert d_none == d_eye == pytest.approx(float(np.sum((x - res.position) ** 2)))

    def test_diag_metric_example(self):
        A = np.diag([4.0, 1.0])
        x = np.array([0.5, 1.0])
        d, res = point_simplex_distance(x, TestClamp.EDGE, A=A)
        assert np.allclose(res.position, [0.5, 0.0]) and d == pytest.approx(1.0)
        assert sampled_simplex_distance(x, TestClamp.EDGE, A=A) == pytest.approx(1.0, abs=1e-3)

    def test_rejects_bad_matrices(self):
        with pytest.raises(ValueError):
            MetricMatrix([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            MetricMatrix([[1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(ValueError):
            point_simplex_distance(np.zeros(2), TestClamp.EDGE, A=np.eye(3))


def test_sampling_oracle_small(rng):
    for _ in range(200):
        x, V = random_simplex_pair(rng)
        d = point_simplex_distance(x, V)[0]
        ref = lattice_simplex_distance(x, V, n=2000)
        assert d <= ref + 1e-9
        assert ref - d <= 1e-3 * diameter2(V) + 1e-12


def test_idempotent(rng):
    for _ in range(100):
        x, V = random_simplex_pair(rng)
        p = clamp_and_project(x, V).position
        assert point_simplex_distance(p, V)[0] == pytest.approx(0.0, abs=1e-18 + 1e-12 * diameter2(V))


def test_monotone_in_gamma(rng):
    for _ in range(100):
        x, V = random_simplex_pair(rng)
        ds = [point_simplex_distance(x, V, g)[0] for g in (0.0, 0.1, 0.5, 2.0)]
        assert all(b <= a + 1e-12 for a, b in zip(ds, ds[1:]))


class TestComplexDistance:
    def test_vertex_hits_zero(self, rng):
        V = rng.normal(size=(6, 2))
        pc = complex_of(V, [(0, 1, 2), (2, 3), (4,), (5,)])
        for v in V:
            assert point_complex_distance(v, pc) == 0.0

    def test_two_vertices(self):
        a, b = np.array([0.0, 0.0]), np.array([4.0, 1.0])
        pc = complex_of([a, b], [(0,), (1,)])
        x = np.array([1.0, 2.0])
        assert point_complex_distance(x, pc) == pytest.approx(min(np.sum((x - a) ** 2), np.sum((x - b) ** 2)))

    def test_square_cycle(self):
        V = [[0, 0], [2, 0], [2, 2], [0, 2]]
        pc = complex_of(V, [(0, 1), (1, 2), (2, 3), (0, 3)])
        centre = np.array([1.0, 1.0])
        assert point_complex_distance(centre, pc) == pytest.approx(1.0)
        ref = min(sampled_simplex_distance(centre, np.asarray(V, float)[list(e)]) for e in [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert ref == pytest.approx(1.0, abs=1e-3)

    def test_empty_model(self):
        pc = PrimeComplex(0, np.zeros((0, 2)), (np.empty((0, 1), dtype=np.int64),), 0.0)
        with pytest.raises(ValueError, match="empty class model"):
            point_complex_distance(np.zeros(2), pc)

    def test_dimension_mismatch(self):
        pc = complex_of([[0, 0], [1, 0]], [(0, 1)])
        with pytest.raises(ValueError):
            ComplexIndex(pc).query(np.zeros((1, 3)))

    @pytest.mark.parametrize("d", [2, 3, 4])
    @pytest.mark.parametrize("gamma", [0.0, 0.3])
    def test_index_matches_brute_force(self, rng, d, gamma):
        n = 14
        V = rng.normal(size=(n, d))
        simplices = set()
        while len(simplices) < 25:
            k = int(rng.integers(1, 4))
            simplices.add(tuple(sorted(rng.choice(n, k, replace=False))))
        # keep only maximal ones
        simplices = {s for s in simplices if not any(set(s) < set(t) for t in simplices)}
        pc = complex_of(V, simplices)
        X = rng.normal(size=(60, d)) * 1.3
        X[:5] = V[:5]
        got = ComplexIndex(pc, gamma).query(X)
        want = np.array([brute_force_complex_distance(x, pc, gamma) for x in X])
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)
        # non-identity metric follows the literal face-descent rule
        B = rng.normal(size=(d, d))
        A = B @ B.T + 0.1 * np.eye(d)
        got = ComplexIndex(pc, gamma).query(X, A)
        want = np.array([brute_force_complex_distance(x, pc, gamma, A) for x in X])
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_full_dimensional_complex(self, rng):
        # triangles in the plane take the containment path
        V = rng.random((30, 2))
        tris = {tuple(sorted(rng.choice(30, 3, replace=False))) for _ in range(40)}
        pc = complex_of(V, tris)
        X = rng.random((200, 2)) * 1.4 - 0.2
        ix = ComplexIndex(pc)
        got = ix.query(X)
        want = np.array([brute_force_complex_distance(x, pc) for x in X])
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)
        assert (got == 0).sum() > 0

    def test_degenerate_maximal_simplex(self):
        V = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 3.0]])
        pc = complex_of(V, [(0, 1, 2), (3,)])
        X = np.array([[1.5, 1.0], [-1.0, 0.0], [0.0, 2.5]])
        got = ComplexIndex(pc).query(X)
        want = [brute_force_complex_distance(x, pc) for x in X]
        assert np.allclose(got, want) and np.allclose(got, [1.0, 1.0, 0.25])
