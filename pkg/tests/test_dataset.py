import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairsemi.dataset import (
    GPN,
    GPP,
    GUN,
    GUP,
    Dataset,
    IngestionSchema,
    SplitSpec,
    concat,
    group_counts,
    load_csv,
    partition_groups,
    read_dataset_csv,
    split_train_test,
    write_dataset_csv,
)
from fairsemi.errors import (
    DataValueError,
    EmptyDataError,
    MissingLabelError,
    SchemaError,
    SplitError,
)


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _ds(a, y, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(len(a), d)), a, y)


SCHEMA = IngestionSchema(
    label_column="income",
    protected_column="sex",
    protected_positive_value="Female",
    positive_label_value=">50K",
    categorical_columns=("job",),
)


class TestLoadCsv:
    def test_protected_mapping_in_file_order(self, tmp_path):
        p = _write(tmp_path, "age,sex,job,income\n30,Female,a,>50K\n40,Male,b,<=50K\n50,Male,a,<=50K\n")
        ds = load_csv(p, SCHEMA)
        assert ds.protected.tolist() == [1, 0, 0]
        assert ds.labels.tolist() == [1, 0, 0]

    def test_numeric_zscore(self, tmp_path):
        p = _write(tmp_path, "v,sex,income\n1,F,1\n2,M,0\n3,M,0\n")
        ds = load_csv(p, IngestionSchema(protected_column="sex", label_column="income",
                                         protected_positive_value="F"))
        # hand z-score with population std sqrt(2/3)
        np.testing.assert_allclose(ds.features[:, 0], [-1.2247449, 0.0, 1.2247449], atol=1e-6)

    def test_one_hot(self, tmp_path):
        p = _write(tmp_path, "age,sex,job,income\n30,Female,a,>50K\n40,Male,b,<=50K\n50,Male,a,<=50K\n")
        ds = load_csv(p, SCHEMA)
        assert ds.feature_names == ("age", "job=a", "job=b")
        np.testing.assert_array_equal(ds.features[:, 1:], [[1, 0], [0, 1], [1, 0]])

    def test_protected_not_in_features(self, tmp_path):
        p = _write(tmp_path, "age,sex,job,income\n30,Female,a,>50K\n40,Male,b,<=50K\n")
        assert "sex" not in " ".join(load_csv(p, SCHEMA).feature_names)

    def test_non_binary_label(self, tmp_path):
        p = _write(tmp_path, "v,sex,y\n1,F,1\n2,M,0\n3,M,2\n")
        schema = IngestionSchema(protected_column="sex", label_column="y", protected_positive_value="F")
        with pytest.raises(DataValueError):
            load_csv(p, schema)

    def test_declared_negative_values(self, tmp_path):
        p = _write(tmp_path, "v,sex,y\n1,F,>50K.\n2,M,<=50K\n3,M,<=50K.\n4,F,>50K\n")
        schema = IngestionSchema(protected_column="sex", label_column="y", protected_positive_value="F",
                                 positive_label_value=">50K,>50K.", negative_label_value="<=50K,<=50K.")
        assert load_csv(p, schema).labels.tolist() == [1, 0, 0, 1]

    def test_missing_rows_dropped(self, tmp_path):
        p = _write(tmp_path, "v,sex,y\n1,F,1\n?,M,0\n3,M,0\n4,F,\n")
        schema = IngestionSchema(protected_column="sex", label_column="y", protected_positive_value="F")
        ds = load_csv(p, schema)
        assert ds.n_rows == 2
        assert ds.row_ids.tolist() == [0, 2]

    def test_missing_column(self, tmp_path):
        p = _write(tmp_path, "v,gender,y\n1,F,1\n")
        with pytest.raises(SchemaError):
            load_csv(p, IngestionSchema(protected_column="sex", label_column="y", protected_positive_value="F"))

    def test_empty_after_drop(self, tmp_path):
        p = _write(tmp_path, "v,sex,y\n?,F,1\n")
        with pytest.raises(EmptyDataError):
            load_csv(p, IngestionSchema(protected_column="sex", label_column="y", protected_positive_value="F"))

    def test_unlabeled_file(self, tmp_path):
        p = _write(tmp_path, "v,sex\n1,F\n2,M\n")
        ds = load_csv(p, IngestionSchema(protected_column="sex", protected_positive_value="F"))
        assert not ds.is_labeled

    def test_threshold_protected(self, tmp_path):
        p = _write(tmp_path, "v,age,y\n1,70,1\n2,30,0\n3,65,0\n")
        ds = load_csv(p, IngestionSchema(protected_column="age", label_column="y", protected_threshold=65))
        assert ds.protected.tolist() == [1, 0, 1]

    def test_deterministic(self, tmp_path):
        p = _write(tmp_path, "age,sex,job,income\n30,Female,a,>50K\n40,Male,b,<=50K\n50,Male,a,<=50K\n")
        a, b = load_csv(p, SCHEMA), load_csv(p, SCHEMA)
        assert a.features.tobytes() == b.features.tobytes()
        assert a.feature_names == b.feature_names

    def test_schema_from_file(self, tmp_path):
        cfg = _write(tmp_path, "[ingestion]\nlabel_column = income\nprotected_column = sex\n"
                     "protected_positive_value = Female\npositive_label_value = >50K\n"
                     "categorical_columns = job\n", "schema.ini")
        assert IngestionSchema.from_file(cfg) == SCHEMA

    def test_schema_unknown_key(self):
        with pytest.raises(SchemaError):
            IngestionSchema.from_mapping({"protected_column": "a", "protected_positive_value": "1",
                                          "colour": "red"})


class TestDatasetType:
    def test_rejects_non_binary_protected(self):
        with pytest.raises(DataValueError):
            Dataset(np.zeros((2, 1)), [0, 2])

    def test_rejects_nan(self):
        with pytest.raises(DataValueError):
            Dataset(np.array([[np.nan]]), [0])

    def test_immutable(self):
        ds = _ds([0, 1], [0, 1])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 5.0

    def test_concat_schema_mismatch(self):
        a = Dataset(np.zeros((1, 1)), [0], [0], ("a",))
        b = Dataset(np.zeros((1, 1)), [0], [0], ("b",))
        with pytest.raises(SchemaError):
            concat([a, b])

    def test_csv_roundtrip(self, tmp_path):
        ds = _ds([0, 1, 1], [1, 0, 1])
        write_dataset_csv(ds, tmp_path / "d.csv")
        back = read_dataset_csv(tmp_path / "d.csv")
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)
        write_dataset_csv(ds.without_labels(), tmp_path / "u.csv")
        assert not read_dataset_csv(tmp_path / "u.csv").is_labeled


class TestSplit:
    def test_sizes(self):
        tr, te = split_train_test(_ds([0] * 10, [1] * 10), SplitSpec(0.8, 1))
        assert (tr.n_rows, te.n_rows) == (8, 2)

    def test_deterministic(self):
        ds = _ds([0, 1] * 10, [1, 0] * 10)
        a = split_train_test(ds, SplitSpec(0.8, 5))
        b = split_train_test(ds, SplitSpec(0.8, 5))
        assert a[0].row_ids.tolist() == b[0].row_ids.tolist()

    def test_empty_side(self):
        with pytest.raises(SplitError):
            split_train_test(_ds([0], [1]), SplitSpec(0.8, 0))

    def test_bad_rate(self):
        with pytest.raises(SplitError):
            SplitSpec(1.0)

    def test_needs_labels(self):
        with pytest.raises(MissingLabelError):
            split_train_test(_ds([0, 1], [0, 1]).without_labels(), SplitSpec())

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(2, 60), s=st.floats(0.05, 0.95), seed=st.integers(0, 2**32))
    def test_roundtrip(self, n, s, seed):
        ds = _ds(np.arange(n) % 2, (np.arange(n) // 2) % 2, seed=seed % 100)
        try:
            tr, te = split_train_test(ds, SplitSpec(s, seed))
        except SplitError:
            return
        assert not set(tr.row_ids) & set(te.row_ids)
        ids = np.concatenate([tr.row_ids, te.row_ids])
        order = np.argsort(ids)
        np.testing.assert_array_equal(np.concatenate([tr.features, te.features])[order], ds.features)
        np.testing.assert_array_equal(np.concatenate([tr.labels, te.labels])[order], ds.labels)


class TestGroups:
    def test_one_per_cell(self):
        ds = _ds([1, 0, 1, 0], [1, 1, 0, 0])
        groups = partition_groups(ds)
        assert {k: v.tolist() for k, v in groups.items()} == {GPP: [0], GUP: [1], GPN: [2], GUN: [3]}
        assert group_counts(ds) == (1, 1, 1, 1)

    def test_degenerate(self):
        ds = _ds([0] * 5, [1] * 5)
        groups = partition_groups(ds)
        assert groups[GUP].tolist() == [0, 1, 2, 3, 4]
        assert all(groups[k].size == 0 for k in (GPP, GPN, GUN))
        assert group_counts(ds) == (0, 5, 0, 0)

    def test_hand_count(self):
        ds = _ds([1, 1, 0, 1, 1, 1], [1, 1, 1, 0, 0, 0])
        assert group_counts(ds) == (2, 1, 3, 0)

    def test_unlabeled(self):
        with pytest.raises(MissingLabelError):
            group_counts(_ds([0], [0]).without_labels())

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=0, max_size=80))
    def test_partition_property(self, cells):
        a = [c[0] for c in cells]
        y = [c[1] for c in cells]
        ds = Dataset(np.zeros((len(cells), 1)), a, y)
        groups = partition_groups(ds)
        seen = np.concatenate(list(groups.values()))
        assert sorted(seen.tolist()) == list(range(len(cells)))
        for key, idx in groups.items():
            for i in idx:
                assert (a[i], y[i]) == tuple(key)
        assert sum(group_counts(ds)) == ds.n_rows
