import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from falcur.data import (Dataset, EmptyDatasetError, PoolState, RawTable, SchemaError,
                         SplitSpec, load_csv, preprocess, split)

SCHEMA = {"age": "numeric", "color": "categorical", "grp": "sensitive", "y": "label"}


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def table(rows, schema=SCHEMA):
    return RawTable(columns=tuple(schema.items()), rows=tuple(tuple(r) for r in rows))


def synthetic(n, d=3, seed=0):
    rng = np.random.default_rng(seed)
    s = np.arange(n) % 2
    return Dataset(X=rng.random((n, d)), y=rng.integers(0, 2, n), s=s,
                   groups=s[:, None], feature_names=tuple(f"f{i}" for i in range(d)))


def test_load_three_rows(tmp_path):
    p = write(tmp_path, "age,color,grp,y,extra\n1,a,m,1,z\n2,b,f,0,z\n3,c,f,1,z\n")
    raw = load_csv(p, SCHEMA)
    assert len(raw.rows) == 3
    assert raw.names == list(SCHEMA)
    assert raw.rows[1] == ("2", "b", "f", "0")


def test_load_missing_declared_column(tmp_path):
    p = write(tmp_path, "age,grp,y\n1,m,1\n")
    with pytest.raises(SchemaError, match="color"):
        load_csv(p, SCHEMA)


def test_load_ragged_row_names_index(tmp_path):
    p = write(tmp_path, "age,grp,y\n1,m,1\n2,f\n")
    with pytest.raises(SchemaError, match="row 1"):
        load_csv(p, {"age": "numeric", "grp": "sensitive", "y": "label"})


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv", SCHEMA)


def test_schema_needs_one_label_and_a_sensitive_column():
    with pytest.raises(SchemaError):
        table([], {"a": "numeric", "g": "sensitive"})
    with pytest.raises(SchemaError):
        table([], {"a": "numeric", "y": "label"})
    with pytest.raises(SchemaError):
        table([], {"a": "weird", "g": "sensitive", "y": "label"})


def test_numeric_min_max():
    ds = preprocess(table([("2", "a", "m", "1"), ("4", "a", "f", "0"), ("6", "a", "f", "1")]),
                    "1", "f")
    assert ds.X[:, ds.feature_names.index("age")].tolist() == [0.0, 0.5, 1.0]


def test_categorical_one_hot():
    ds = preprocess(table([("1", "a", "m", "1"), ("2", "b", "f", "0"), ("3", "c", "f", "1")]),
                    "1", "f")
    cols = [i for i, n in enumerate(ds.feature_names) if n.startswith("color=")]
    assert len(cols) == 3
    assert np.array_equal(ds.X[:, cols], np.eye(3))


def test_missing_rows_dropped():
    rows = [("1", "a", "m", "1"), ("2", "b", "f", "0"), ("NaN", "c", "f", "1"),
            ("4", "a", "m", "0"), ("5", "b", "f", "1")]
    assert preprocess(table(rows), "1", "f").n == 4


def test_all_rows_missing():
    with pytest.raises(EmptyDatasetError):
        preprocess(table([("?", "a", "m", "1")]), "1", "m")


def test_constant_column_zeros_with_warning():
    ds = preprocess(table([("7", "a", "m", "1"), ("7", "b", "f", "0")]), "1", "f")
    assert ds.X[:, ds.feature_names.index("age")].tolist() == [0.0, 0.0]
    assert any("age" in w for w in ds.warnings)


def test_label_and_sensitive_coding():
    ds = preprocess(table([("1", "a", "m", "yes"), ("2", "b", "f", "no"), ("3", "a", "f", "yes")]),
                    "yes", "f")
    assert ds.y.tolist() == [1, 0, 1]
    assert ds.s.tolist() == [0, 1, 1]
    assert not any(n.startswith("grp") for n in ds.feature_names)
    with_s = preprocess(table([("1", "a", "m", "1"), ("2", "b", "f", "0")]), "1", "f",
                        include_sensitive=True)
    assert "grp=f" in with_s.feature_names


def test_preprocess_is_idempotent_on_same_input():
    raw = table([("1", "a", "m", "1"), ("5", "b", "f", "0"), ("3", "c", "f", "1")])
    a, b = preprocess(raw, "1", "f"), preprocess(raw, "1", "f")
    assert np.array_equal(a.X, b.X) and a.feature_names == b.feature_names


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.sampled_from("abc"), st.sampled_from("mf"),
                          st.sampled_from("01")), min_size=2, max_size=30))
def test_features_always_in_unit_interval(rows):
    rows = [(str(a), c, g, y) for a, c, g, y in rows]
    if len({r[2] for r in rows}) < 2 or "1" not in {r[3] for r in rows}:
        return
    ds = preprocess(table(rows), "1", "f")
    assert ds.X.min() >= 0.0 and ds.X.max() <= 1.0
    assert np.allclose(ds.X[:, [i for i, n in enumerate(ds.feature_names)
                                if n.startswith("color=")]].sum(1), 1.0)


def test_split_sizes():
    pool = split(synthetic(100), SplitSpec(seed=7))
    assert (len(pool.labeled), len(pool.test), len(pool.unlabeled)) == (10, 20, 70)


def test_split_remainder_to_unlabeled():
    pool = split(synthetic(1003), SplitSpec(seed=0))
    assert (len(pool.labeled), len(pool.test), len(pool.unlabeled)) == (100, 200, 703)


def test_split_deterministic_and_partition():
    ds = synthetic(257)
    a, b = split(ds, SplitSpec(seed=3)), split(ds, SplitSpec(seed=3))
    for name in ("labeled", "unlabeled", "test"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    allidx = np.sort(np.concatenate([a.labeled, a.unlabeled, a.test]))
    assert np.array_equal(allidx, np.arange(257))
    c = split(ds, SplitSpec(seed=4))
    assert not np.array_equal(a.labeled, c.labeled)


def test_split_errors():
    with pytest.raises(ValueError):
        SplitSpec(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        split(synthetic(12), SplitSpec(0.01, 0.2, 0.79))


def test_pool_acquire_moves_indices():
    pool = PoolState(labeled=[0, 1], unlabeled=[2, 3, 4, 5], test=[6, 7])
    pool.acquire([4, 2])
    assert pool.labeled.tolist() == [0, 1, 4, 2]
    assert pool.unlabeled.tolist() == [3, 5]
    with pytest.raises(ValueError):
        pool.acquire([6])
    with pytest.raises(ValueError):
        pool.acquire([3, 3])


def test_pool_rejects_overlap():
    with pytest.raises(AssertionError):
        PoolState(labeled=[0, 1], unlabeled=[1, 2], test=[3])


def test_vendored_datasets_load():
    from pathlib import Path

    from falcur import runner
    configs = Path(__file__).resolve().parents[1] / "configs"
    for name, n in (("compas", 5278), ("adult", 30162)):
        cfg = runner.load_config(configs / f"{name}.json")
        ds = runner.load_dataset(cfg)
        assert ds.n == n
        assert set(np.unique(ds.y)) == {0, 1}
        assert set(np.unique(ds.s)) == {0, 1}
