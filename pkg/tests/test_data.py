import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfeature.data import (
    AngleScaler,
    DataError,
    FeatureMatrix,
    SmoteConfig,
    angle_scale,
    load_csv,
    load_profile_csv,
    pca_fit_transform,
    preprocess,
    read_feature_csv,
    smote_balance,
    standardize,
    stratified_subsample,
    write_feature_csv,
)
from qfeature.seeding import derive_seed, splitmix64
from qfeature.synthetic import CCF_SAMPLE, LP_SAMPLE


def write(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def imbalanced(n_min=10, n_maj=50, d=3, seed=0):
    rng = np.random.default_rng(seed)
    x = np.vstack([rng.normal(size=(n_maj, d)), rng.normal(2, 1, size=(n_min, d))])
    y = np.r_[np.zeros(n_maj, int), np.ones(n_min, int)]
    return FeatureMatrix(x, y, [f"c{i}" for i in range(d)])


class TestLoadCsv:
    def test_well_formed(self, tmp_path):
        raw = load_csv(write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n5,6,0\n"), "y")
        assert raw.x.shape == (3, 2) and raw.columns == ["a", "b"]
        np.testing.assert_array_equal(raw.y, [0, 1, 0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            load_csv(tmp_path / "nope.csv", "y")

    def test_missing_label(self, tmp_path):
        with pytest.raises(DataError, match="'Class'"):
            load_csv(write(tmp_path, "a,b\n1,2\n"), "Class")

    def test_ragged_row(self, tmp_path):
        with pytest.raises(DataError, match="line 3"):
            load_csv(write(tmp_path, "a,y\n1,0\n1,2,0\n"), "y")

    def test_non_numeric_cell(self, tmp_path):
        with pytest.raises(DataError, match=r"line 2, column 'a'"):
            load_csv(write(tmp_path, "a,y\nfoo,0\n"), "y")

    def test_non_binary_label(self, tmp_path):
        with pytest.raises(DataError, match="not 0/1"):
            load_csv(write(tmp_path, "a,y\n1,2\n"), "y")

    def test_missing_cells_become_nan(self, tmp_path):
        raw = load_csv(write(tmp_path, "a,b,y\n,2,0\nNA,3,\n"), "y")
        assert np.isnan(raw.x[0, 0]) and np.isnan(raw.x[1, 0]) and np.isnan(raw.y[1])

    def test_categorical_first_appearance_codes(self, tmp_path):
        raw = load_csv(write(tmp_path, "g,v,y\nb,1,0\na,2,1\nb,3,1\n"), "y", categorical=["g"])
        np.testing.assert_array_equal(raw.x[:, 0], [0, 1, 0])
        assert raw.codes == {"g": {"b": 0, "a": 1}}

    def test_ccf_sample_has_thirty_feature_columns(self):
        raw = load_profile_csv(CCF_SAMPLE, "ccf")
        assert len(raw.columns) == 30

    def test_lp_sample_has_eleven_feature_columns(self):
        raw = load_profile_csv(LP_SAMPLE, "lp")
        assert len(raw.columns) == 11


class TestStandardize:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_moments(self, seed):
        x = np.random.default_rng(seed).normal(3, 5, size=(40, 4))
        z, _, _ = standardize(x)
        assert np.all(np.abs(z.mean(axis=0)) < 1e-10)
        assert np.all(np.abs(z.std(axis=0) - 1) < 1e-10)

    def test_constant_column_centred(self):
        z, _, _ = standardize(np.array([[1.0, 2.0], [1.0, 4.0]]))
        np.testing.assert_array_equal(z[:, 0], 0)


class TestSmote:
    def test_counts(self):
        out = smote_balance(imbalanced(), SmoteConfig(5, seed=1))
        assert np.sum(out.y == 0) == 50 and np.sum(out.y == 1) == 50
        assert out.notes["smote_synthetic_rows"] == 40

    def test_originals_preserved(self):
        data = imbalanced()
        out = smote_balance(data, SmoteConfig(5, seed=1))
        np.testing.assert_array_equal(out.x[: data.n_rows], data.x)
        np.testing.assert_array_equal(out.y[: data.n_rows], data.y)

    def test_balanced_input_unchanged(self):
        data = imbalanced(20, 20)
        out = smote_balance(data)
        np.testing.assert_array_equal(out.x, data.x)

    def test_synthetic_rows_on_neighbour_segments(self):
        data = imbalanced()
        k = 5
        out = smote_balance(data, SmoteConfig(k, seed=2))
        minority = data.x[data.y == 1]
        d2 = ((minority[:, None] - minority[None]) ** 2).sum(-1)
        np.fill_diagonal(d2, np.inf)
        neighbours = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for row in out.x[data.n_rows:]:
            best = np.inf
            for i, base in enumerate(minority):
                for j in neighbours[i]:
                    seg = minority[j] - base
                    lam = float(np.clip((row - base) @ seg / (seg @ seg), 0, 1))
                    best = min(best, np.linalg.norm(base + lam * seg - row))
            assert best < 1e-10

    def test_minority_too_small(self):
        with pytest.raises(DataError, match="needs at least 6"):
            smote_balance(imbalanced(5, 50), SmoteConfig(5))

    def test_deterministic(self):
        a = smote_balance(imbalanced(), SmoteConfig(seed=3))
        b = smote_balance(imbalanced(), SmoteConfig(seed=3))
        np.testing.assert_array_equal(a.x, b.x)


class TestSubsample:
    def test_stratified(self):
        out = stratified_subsample(smote_balance(imbalanced(30, 200), SmoteConfig(seed=0)), 100, 7)
        assert out.n_rows == 100 and np.sum(out.y == 1) == 50

    def test_insufficient(self):
        with pytest.raises(DataError, match="only 60 are available"):
            stratified_subsample(imbalanced(), 500, 0)


class TestPca:
    def test_line_data(self):
        t = np.linspace(-1, 1, 11)
        model, _ = pca_fit_transform(np.c_[t, t], 1)
        np.testing.assert_allclose(np.abs(model.components[:, 0]), [2**-0.5, 2**-0.5], atol=1e-12)
        assert abs(model.explained_variance_ratio[0] - 1) < 1e-10

    def test_full_rank_preserves_distances(self):
        x = np.random.default_rng(40).normal(size=(30, 5))
        _, proj = pca_fit_transform(x, 5)
        d_in = np.linalg.norm(x[:, None] - x[None], axis=-1)
        d_out = np.linalg.norm(proj[:, None] - proj[None], axis=-1)
        np.testing.assert_allclose(d_out, d_in, atol=1e-8)

    def test_decorrelation(self):
        x = np.random.default_rng(41).normal(size=(100, 10)) @ np.random.default_rng(42).normal(size=(10, 10))
        model, proj = pca_fit_transform(x, 10)
        cov = np.cov(proj, rowvar=False)
        np.testing.assert_allclose(cov - np.diag(np.diag(cov)), 0, atol=1e-8)
        assert np.all(np.diff(np.diag(cov)) <= 1e-10)
        np.testing.assert_allclose(model.components.T @ model.components, np.eye(10), atol=1e-8)
        assert np.all(np.diff(model.explained_variance_ratio) <= 0)
        assert model.explained_variance_ratio.sum() <= 1 + 1e-10

    def test_zero_variance(self):
        with pytest.raises(DataError, match="zero variance"):
            pca_fit_transform(np.ones((5, 3)), 2)

    def test_bad_dimensions(self):
        with pytest.raises(DataError):
            pca_fit_transform(np.ones((5, 3)), 4)
        with pytest.raises(DataError):
            pca_fit_transform(np.ones((1, 3)), 1)


class TestAngleScale:
    def test_endpoints_and_midpoint(self):
        scaler, out = angle_scale(np.array([[-2.0], [2.0], [0.0]]))
        np.testing.assert_allclose(out[:, 0], [0, np.pi, np.pi / 2])

    def test_clamped(self):
        scaler = AngleScaler(np.array([-2.0]), np.array([2.0]))
        assert scaler.transform(np.array([[3.0]]))[0, 0] == np.pi
        assert scaler.transform(np.array([[-9.0]]))[0, 0] == 0.0

    def test_constant_feature(self):
        _, out = angle_scale(np.array([[1.0, 0.0], [1.0, 1.0]]))
        np.testing.assert_array_equal(out[:, 0], np.pi / 2)

    def test_empty_fit(self):
        with pytest.raises(DataError):
            angle_scale(np.ones((2, 2)), fit_rows=np.empty((0, 2)))

    def test_range_on_random_rows(self):
        rng = np.random.default_rng(43)
        scaler, _ = angle_scale(rng.normal(size=(50, 7)))
        out = scaler.transform(rng.normal(0, 3, size=(1000, 7)))
        assert out.min() >= 0 and out.max() <= np.pi


class TestPreprocess:
    @pytest.mark.parametrize("profile,path", [("ccf", CCF_SAMPLE), ("lp", LP_SAMPLE)])
    def test_shape_and_balance(self, profile, path):
        fm = preprocess(load_profile_csv(path, profile), profile, seed=0)
        assert fm.x.shape == (500, 7)
        assert np.sum(fm.y == 0) == 250
        assert fm.names == [f"f{i}" for i in range(1, 8)]

    def test_ccf_drops_time_and_amount(self):
        fm = preprocess(load_profile_csv(CCF_SAMPLE, "ccf"), "ccf", seed=0)
        assert fm.notes["dropped_columns"] == ["Time", "Amount"]

    def test_lp_reports_dropped_rows(self):
        fm = preprocess(load_profile_csv(LP_SAMPLE, "lp"), "lp", seed=0)
        assert fm.notes["rows_dropped_missing"] > 0
        assert fm.notes["source_features"] == 11

    def test_deterministic(self):
        raw = load_profile_csv(CCF_SAMPLE, "ccf")
        a, b = preprocess(raw, "ccf", 3), preprocess(raw, "ccf", 3)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_seed_changes_output(self):
        raw = load_profile_csv(CCF_SAMPLE, "ccf")
        assert not np.array_equal(preprocess(raw, "ccf", 0).x, preprocess(raw, "ccf", 1).x)

    def test_insufficient_rows(self):
        raw = load_profile_csv(CCF_SAMPLE, "ccf")
        with pytest.raises(DataError, match="available"):
            preprocess(raw, "ccf", 0, n_samples=5000)

    def test_missing_profile_columns(self, tmp_path):
        raw = load_csv(write(tmp_path, "V1,Class\n1,0\n2,1\n"), "Class")
        with pytest.raises(DataError, match="absent"):
            preprocess(raw, "ccf", 0)

    def test_unknown_profile(self):
        with pytest.raises(DataError, match="unknown profile"):
            load_profile_csv(CCF_SAMPLE, "iris")

    def test_feature_csv_round_trip(self, tmp_path):
        fm = preprocess(load_profile_csv(LP_SAMPLE, "lp"), "lp", seed=0)
        write_feature_csv(fm, tmp_path / "f.csv")
        back = read_feature_csv(tmp_path / "f.csv")
        np.testing.assert_array_equal(back.x, fm.x)
        np.testing.assert_array_equal(back.y, fm.y)
        assert back.names == fm.names


class TestSeeding:
    def test_splitmix_reference_value(self):
        # first output of the reference SplitMix64 generator seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_streams_independent(self):
        assert derive_seed(0, "smote") != derive_seed(0, "subsample")
        assert derive_seed(0, "init") != derive_seed(1, "init")

    def test_stable(self):
        assert derive_seed(42, "init") == derive_seed(42, "init")
        assert 0 <= derive_seed(-1, "x") < 2**64
