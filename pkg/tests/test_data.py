import numpy as np
import pytest

from nsc.data import (
    BUILTIN,
    SIMULATED,
    GeneratorSpec,
    LabeledDataset,
    Preprocessor,
    fit_pca,
    generate,
    load_builtin,
    load_csv,
    minmax_scale,
    pca,
    save_csv,
    simulated_spec,
    split_indices,
    train_test_split,
)
from nsc.errors import ConfigError, DataError


def noiseless(name, n=40, **params):
    kind, _ = SIMULATED[name]
    return generate(GeneratorSpec(kind, n, 0.0, 3, params))


class TestGenerators:
    def test_d1_noiseless_equally_spaced(self):
        ds = noiseless("D1", 4)
        for label, radius in ((0, 10.0), (1, 20.0)):
            P = ds.class_points(label)
            assert np.allclose(np.linalg.norm(P, axis=1), radius, atol=1e-9)
            ang = np.sort(np.mod(np.arctan2(P[:, 1], P[:, 0]), 2 * np.pi))
            assert np.allclose(np.diff(np.r_[ang, ang[0] + 2 * np.pi]), np.pi / 2, atol=1e-9)

    @pytest.mark.parametrize("name", sorted(SIMULATED))
    def test_balanced_and_deterministic(self, name):
        a = generate(simulated_spec(name, 37, seed=4))
        b = generate(simulated_spec(name, 37, seed=4))
        assert a == b
        assert np.array_equal(np.bincount(a.labels), [37, 37])
        assert a.d == {"D1": 2, "D2": 2, "D3": 3, "D4": 3, "D5": 4}[name]
        assert generate(simulated_spec(name, 37, seed=5)) != a

    def test_d2_on_spirals(self):
        ds = noiseless("D2", 50)
        for label, phase in ((0, 0.0), (1, np.pi)):
            P = ds.class_points(label)
            r = np.linalg.norm(P, axis=1)
            t = (r - 5.0) / 35.0 * 3 * np.pi
            assert np.allclose(P, np.c_[r * np.cos(t + phase), r * np.sin(t + phase)], atol=1e-9)
            assert r.min() >= 5.0 - 1e-9 and r.max() <= 40.0 + 1e-9

    def test_d3_interlocking(self):
        ds = noiseless("D3", 50)
        A, B = ds.class_points(0), ds.class_points(1)
        assert np.allclose(A[:, 2], 0) and np.allclose(np.linalg.norm(A[:, :2], axis=1), 10)
        assert np.allclose(B[:, 1], 0) and np.allclose(np.linalg.norm(B[:, [0, 2]] - [10, 0], axis=1), 10)

    def test_d4_four_pairs(self):
        ds = noiseless("D4", 80)
        for gx in (0, 1):
            for gy in (0, 1):
                cell = ((ds.points[:, 0] > 25) == gx) & ((ds.points[:, 1] > 20) == gy)
                assert np.array_equal(np.bincount(ds.labels[cell]), [20, 20])
                # the circle lying in the xy-plane changes class from cell to cell
                flat = [np.allclose(ds.points[cell & (ds.labels == c), 2], 0) for c in (0, 1)]
                assert flat == [(gx + gy) % 2 == 0, (gx + gy) % 2 == 1]

    def test_d5_spheres(self):
        ds = noiseless("D5", 200)
        A, B = ds.class_points(0), ds.class_points(1)
        assert np.allclose(A[:, 3], 0) and np.allclose(np.linalg.norm(A[:, :3], axis=1), 10)
        assert np.allclose(B[:, 2], 0) and np.allclose(np.linalg.norm(B[:, [0, 1, 3]] - [10, 0, 0], axis=1), 10)

    def test_d1_scaled_radii(self):
        # noiseless circles of radius 10 and 20 scale to 0.25 and 0.5 exactly
        scaled, _ = minmax_scale(noiseless("D1", 500))
        c = scaled.points.mean(axis=0)
        for label, want in ((0, 0.25), (1, 0.5)):
            r = np.linalg.norm(scaled.class_points(label) - c, axis=1)
            assert np.allclose(r, want, atol=1e-4)
        # noise widens the bounding box, shrinking both radii by the same factor
        scaled, _ = minmax_scale(generate(simulated_spec("D1", 500, seed=0)))
        r0, r1 = (np.linalg.norm(scaled.class_points(k) - 0.5, axis=1).mean() for k in (0, 1))
        assert r1 / r0 == pytest.approx(2.0, rel=0.02)
        assert 0.4 <= r1 <= 0.5 and 0.2 <= r0 <= 0.25

    def test_bad_specs(self):
        with pytest.raises(ConfigError):
            GeneratorSpec("torus")
        with pytest.raises(ConfigError):
            GeneratorSpec("two_circles", n_per_class=0)
        with pytest.raises(ConfigError):
            GeneratorSpec("two_circles", noise_rho=-1)
        with pytest.raises(ConfigError):
            GeneratorSpec("two_circles", params={"radius": 3})


class TestCSV:
    def test_plain(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1.0,2.0,0\n3.0,4.0,1\n")
        ds = load_csv(p)
        assert ds.points.tolist() == [[1, 2], [3, 4]] and ds.labels.tolist() == [0, 1]

    def test_header(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("x,y,label\n1.0,2.0,0\n3.0,4.0,1\n")
        assert load_csv(p).n == 2

    def test_ragged(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2,0\n3,4,1\n5,1\n")
        with pytest.raises(DataError, match="row 3"):
            load_csv(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("x,y,label\n1,2,0\n3,abc,1\n")
        with pytest.raises(DataError, match="row 3, column 2"):
            load_csv(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("")
        with pytest.raises(DataError):
            load_csv(p)

    def test_round_trip(self, tmp_path):
        ds = generate(simulated_spec("D5", 10, seed=1))
        save_csv(ds, tmp_path / "d.csv")
        assert load_csv(tmp_path / "d.csv") == ds

    def test_builtin(self):
        iris = load_builtin("iris")
        assert (iris.n, iris.d) == (150, 4) and np.array_equal(np.bincount(iris.labels), [50, 50, 50])
        bc = load_builtin("breast_cancer")
        assert (bc.n, bc.d) == (569, 30) and np.array_equal(np.bincount(bc.labels), [212, 357])
        assert set(BUILTIN) == {"iris", "breast_cancer"}
        with pytest.raises(DataError):
            load_builtin("mnist")


class TestSplit:
    def test_iris_stratified(self):
        iris = load_builtin("iris")
        tr, te = train_test_split(iris, 0.5, True, 0)
        assert tr.n == te.n == 75
        assert np.array_equal(np.bincount(tr.labels), [25, 25, 25])

    def test_nearest_rounding(self):
        tr, te = split_indices(np.zeros(5404, dtype=int), 0.1, stratified=False, seed=0)
        assert (tr.size, te.size) == (540, 4864)

    def test_disjoint_exhaustive(self):
        labels = np.repeat([0, 1, 2], [7, 12, 30])
        tr, te = split_indices(labels, 0.3, True, 2)
        assert np.intersect1d(tr, te).size == 0 and np.union1d(tr, te).size == labels.size

    def test_seeds(self):
        labels = np.repeat([0, 1], 50)
        a, _ = split_indices(labels, 0.5, True, 1)
        b, _ = split_indices(labels, 0.5, True, 2)
        c, _ = split_indices(labels, 0.5, True, 1)
        assert a.size == b.size and not np.array_equal(a, b) and np.array_equal(a, c)

    def test_singleton_class(self):
        with pytest.raises(DataError):
            split_indices(np.array([0, 0, 1]), 0.5, True)
        with pytest.raises(ConfigError):
            split_indices(np.zeros(4), 1.0)


class TestScaling:
    def test_range(self):
        ds = LabeledDataset(np.array([[10.0, 5.0], [20.0, 5.0], [15.0, 5.0]]), np.array([0, 1, 1]))
        scaled, t = minmax_scale(ds)
        assert scaled.points[:, 0].tolist() == [0.0, 1.0, 0.5]
        assert np.all(scaled.points[:, 1] == 0.0)
        assert t.apply(np.array([[25.0, 7.0]])).tolist() == [[1.5, 0.0]]


class TestPCA:
    def test_plane_in_5d(self, rng):
        basis = rng.normal(size=(2, 5))
        X = rng.normal(size=(60, 2)) @ basis + 3.0
        b = fit_pca(X, 2)
        assert np.max(np.abs(b.inverse(b.apply(X)) - X)) <= 1e-9

    def test_full_rank_isometry(self, rng):
        X = rng.normal(size=(40, 4))
        Z = fit_pca(X, 4).apply(X)
        D = lambda A: np.linalg.norm(A[:, None] - A[None], axis=2)
        assert np.max(np.abs(D(Z) - D(X))) <= 1e-9

    def test_dominant_direction(self):
        X = np.random.default_rng(3).normal(size=(10_000, 2)) * [3.0, 1.0]
        b = fit_pca(X, 1)
        assert abs(b.components[0, 0]) >= 0.99 and b.components[0, 0] > 0

    def test_diagonal_covariance(self, rng):
        X = rng.normal(size=(500, 4)) @ rng.normal(size=(4, 4))
        ds, _ = pca(LabeledDataset(X, np.zeros(500, dtype=int)), 3)
        C = np.cov(ds.points, rowvar=False)
        assert np.allclose(C - np.diag(np.diag(C)), 0, atol=1e-9)
        assert np.all(np.diff(np.diag(C)) <= 0)

    def test_too_many_dims(self, rng):
        with pytest.raises(ConfigError):
            fit_pca(rng.normal(size=(5, 3)), 4)

    def test_preprocessor_order(self, rng):
        X = rng.normal(size=(30, 6))
        pre = Preprocessor.fit(X, 2, True)
        Z = pre.apply(X)
        assert Z.shape == (30, 2) and np.allclose(Z.min(0), 0) and np.allclose(Z.max(0), 1)
