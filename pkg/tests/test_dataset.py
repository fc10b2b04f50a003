import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodecount.dataset import (
    CSV_HEADER,
    Dataset,
    FeatureSubset,
    LabeledExample,
    SubsampleSpec,
    keep_count,
    load_csv,
    make_folds,
    project,
    standardize,
    subsample,
    subsample_folds,
    write_csv,
)
from nodecount.errors import (
    ClassAbsent,
    ConfigError,
    DataError,
    DomainError,
    InvalidLabel,
    MalformedRow,
    NonPositiveEta,
)

from conftest import make_dataset

HEADER = ",".join(CSV_HEADER)


def write(tmp_path, *rows, header=HEADER):
    p = tmp_path / "data.csv"
    p.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return p


class TestLoadCsv:
    def test_field_mapping(self, tmp_path):
        ds = load_csv(write(tmp_path, "12.4,10,5,6,afternoon,2"))
        assert ds.examples == [LabeledExample(12.4, 10, 5, 6, "afternoon", 2)]
        assert ds.subset is FeatureSubset.ETA_POWER_DISTANCE

    def test_non_positive_eta(self, tmp_path):
        with pytest.raises(NonPositiveEta) as exc:
            load_csv(write(tmp_path, "12.4,10,5,6,afternoon,2", "0.0,10,5,6,afternoon,2"))
        assert exc.value.line == 3 and exc.value.field == "eta_s"

    @pytest.mark.parametrize(
        "row, error, field",
        [
            ("12.4,7,5,6,afternoon,2", DomainError, "tx_power_dbm"),
            ("12.4,10,4,6,afternoon,2", DomainError, "distance_m"),
            ("12.4,10,5,3,afternoon,2", DomainError, "channel"),
            ("12.4,10,5,6,evening,2", DomainError, "time_of_day"),
            ("12.4,10,5,6,afternoon,5", InvalidLabel, "n_nodes"),
            ("abc,10,5,6,afternoon,2", MalformedRow, "eta_s"),
            ("12.4,10,5,6,afternoon", MalformedRow, "row"),
        ],
    )
    def test_row_errors_name_line_and_field(self, tmp_path, row, error, field):
        with pytest.raises(error) as exc:
            load_csv(write(tmp_path, row))
        assert exc.value.line == 2
        assert exc.value.field == field

    def test_bad_header(self, tmp_path):
        with pytest.raises(MalformedRow):
            load_csv(write(tmp_path, "1,10,5,6,night,1", header="eta,p,d,ch,tod,n"))

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv")

    def test_full_campaign_row_count(self, campaign, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(campaign, p)
        assert len(load_csv(p)) == 5400

    def test_round_trip_is_byte_identical(self, campaign, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(campaign.take(np.arange(300)), a)
        write_csv(load_csv(a), b)
        assert a.read_bytes() == b.read_bytes()


class TestProject:
    def test_eta_only_shape(self, campaign):
        assert project(campaign, FeatureSubset.ETA_ONLY).X.shape == (5400, 1)

    def test_full_subset_is_identity(self, campaign):
        np.testing.assert_array_equal(project(campaign, FeatureSubset.ETA_POWER_DISTANCE).X, campaign.X)

    def test_eta_distance_columns(self):
        ds = Dataset(eta=[1.5, 2.5, 3.5], tx_power=[0, 5, 10], distance=[1, 5, 10],
                     channel=[1, 6, 11], time_of_day=["night"] * 3, labels=[1, 2, 3])
        X = project(ds, FeatureSubset.ETA_DISTANCE).X
        np.testing.assert_array_equal(X, [[1.5, 1], [2.5, 5], [3.5, 10]])

    @pytest.mark.parametrize("subset", list(FeatureSubset))
    def test_labels_and_count_unchanged(self, campaign, subset):
        p = project(campaign, subset)
        assert len(p) == len(campaign)
        np.testing.assert_array_equal(p.labels, campaign.labels)
        assert p.X.shape[1] == subset.dimension
        assert subset.columns[0] == "eta"

    def test_parse(self):
        assert FeatureSubset.parse("eta+ptx+d") is FeatureSubset.ETA_POWER_DISTANCE
        assert FeatureSubset.parse("eta_only") is FeatureSubset.ETA_ONLY
        with pytest.raises(ConfigError):
            FeatureSubset.parse("rssi")


class TestFolds:
    def test_balanced_campaign(self, campaign):
        plan = make_folds(campaign, 5, seed=1)
        for f in range(5):
            fold_labels = campaign.labels[plan.assignment == f]
            # 1350 per class / 5 folds
            assert [int(np.sum(fold_labels == c)) for c in (1, 2, 3, 4)] == [1350 // 5] * 4

    def test_small_exact(self):
        ds = make_dataset(np.arange(1, 9), [1] * 4 + [2] * 4)
        plan = make_folds(ds, 2, seed=0)
        for f in range(2):
            lab = ds.labels[plan.assignment == f]
            assert np.sum(lab == 1) == 2 and np.sum(lab == 2) == 2

    def test_deterministic(self, campaign):
        a = make_folds(campaign, 5, seed=7)
        b = make_folds(campaign, 5, seed=7)
        np.testing.assert_array_equal(a.assignment, b.assignment)

    def test_too_few_examples(self):
        ds = make_dataset([1, 2, 3, 4, 5, 6], [1, 1, 1, 1, 1, 2])
        with pytest.raises(ClassAbsent):
            make_folds(ds, 2)

    def test_split_partitions(self, campaign):
        plan = make_folds(campaign, 5, seed=3)
        tests = np.concatenate([test for _, test in plan])
        assert sorted(tests.tolist()) == list(range(len(campaign)))
        train, test = plan.split(0)
        assert len(np.intersect1d(train, test)) == 0 and len(train) + len(test) == len(campaign)

    @settings(max_examples=60, deadline=None)
    @given(
        counts=st.lists(st.integers(min_value=5, max_value=40), min_size=2, max_size=4),
        folds=st.integers(min_value=2, max_value=5),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_stratification_property(self, counts, folds, seed):
        labels = np.concatenate([[c + 1] * k for c, k in enumerate(counts)])
        ds = make_dataset(np.arange(1, len(labels) + 1), labels)
        plan = make_folds(ds, folds, seed)
        assert plan.assignment.min() >= 0 and plan.assignment.max() < folds
        for c in np.unique(labels):
            per_fold = np.bincount(plan.assignment[labels == c], minlength=folds)
            assert per_fold.max() - per_fold.min() <= 1


class TestSubsample:
    @pytest.mark.parametrize(
        "fractions, expected",
        [
            ({1: 0.10, 2: 0.20, 3: 0.50, 4: 1.00}, [135, 270, 675, 1350]),
            ({1: 0.20, 2: 0.30, 3: 0.40, 4: 1.00}, [270, 405, 540, 1350]),
        ],
    )
    def test_documented_counts(self, campaign, fractions, expected):
        sub = subsample(campaign, SubsampleSpec(fractions, seed=5))
        assert list(sub.class_counts().values()) == expected

    def test_identity_at_one(self, campaign):
        sub = subsample(campaign, SubsampleSpec({c: 1.0 for c in (1, 2, 3, 4)}, seed=3))
        np.testing.assert_array_equal(np.sort(sub.eta), np.sort(campaign.eta))

    def test_monotone_selection(self, campaign):
        def keys(ds):
            return set(zip(ds.eta.tolist(), ds.labels.tolist()))

        small = subsample(campaign, SubsampleSpec({1: 0.1, 2: 0.2, 3: 0.3, 4: 0.5}, seed=9))
        large = subsample(campaign, SubsampleSpec({1: 0.3, 2: 0.3, 3: 0.6, 4: 0.5}, seed=9))
        assert keys(small) <= keys(large)

    def test_deterministic(self, campaign):
        spec = SubsampleSpec.parse("10-20-50-100", seed=11)
        np.testing.assert_array_equal(subsample(campaign, spec).eta, subsample(campaign, spec).eta)

    def test_parse_and_name(self):
        spec = SubsampleSpec.parse("20-30-40-100")
        assert spec.proportion_per_class == {1: 0.2, 2: 0.3, 3: 0.4, 4: 1.0}
        assert spec.name == "20-30-40-100"

    @pytest.mark.parametrize("bad", [{1: 0.0}, {1: 1.5}, {7: 0.5}])
    def test_invalid_fraction(self, bad):
        with pytest.raises(ConfigError):
            SubsampleSpec(bad)

    def test_round_half_up(self):
        assert keep_count(5, 0.3) == 2  # 1.5 -> 2
        assert keep_count(5, 0.5) == 3  # 2.5 -> 3
        assert keep_count(1350, 0.1) == 135

    def test_per_fold_subsampling_keeps_folds_and_totals(self, campaign):
        plan = make_folds(campaign, 5, seed=42)
        spec = SubsampleSpec.parse("10-20-50-100", seed=42)
        sub, sub_plan = subsample_folds(campaign, plan, spec)
        assert list(sub.class_counts().values()) == [135, 270, 675, 1350]
        for f in range(5):
            lab = sub.labels[sub_plan.assignment == f]
            assert [int(np.sum(lab == c)) for c in (1, 2, 3, 4)] == [27, 54, 135, 270]


class TestStandardize:
    def test_two_values_sample_sd(self):
        Z, _, params = standardize([[1.0], [3.0]])
        np.testing.assert_allclose(Z[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)
        assert params.mean[0] == 2.0
        assert params.scale[0] == pytest.approx(np.sqrt(2))

    def test_constant_column_flagged(self):
        Z, _, params = standardize([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]])
        np.testing.assert_array_equal(Z[:, 0], [0, 0, 0])
        assert params.zero_variance.tolist() == [True, False]

    def test_test_uses_train_parameters(self):
        Z, Zt, _ = standardize([[1.0], [3.0], [8.0]], [[4.0], [10.0]])
        assert Zt[0, 0] == 0.0
        assert Zt[1, 0] > Z.max()

    def test_moments(self, campaign):
        Z, _, _ = standardize(campaign.X)
        np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1, atol=1e-12)

    def test_empty_train(self):
        with pytest.raises(DataError):
            standardize(np.zeros((0, 2)))


class TestDatasetValidation:
    def test_empty(self):
        with pytest.raises(DataError):
            Dataset.from_examples([])

    def test_out_of_domain_column(self):
        with pytest.raises(DataError):
            make_dataset([1.0, 2.0], [1, 5])

    def test_arrays_read_only(self, campaign):
        with pytest.raises(ValueError):
            campaign.eta[0] = 1.0
