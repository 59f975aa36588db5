import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsmote.dataset import (
    ClassCountError,
    Dataset,
    MissingFileError,
    MissingValueError,
    NonNumericCellError,
    RaggedRowError,
    TooFewRowsError,
    imbalance_degree,
    load_csv,
    split_by_class,
    stratified_split,
    write_csv,
)

from conftest import write_text


def test_load_small_file(tmp_path):
    f = write_text(tmp_path / "d.csv", "a,b,label\n0,0,0\n1,1,1\n2,2,1\n")
    d = load_csv(f)
    assert d.n_features == 2
    assert d.class_counts() == {0: 1, 1: 2}
    assert d.feature_names == ("a", "b")
    assert d.label_names == ("0", "1")


def test_labels_mapped_by_first_occurrence(tmp_path):
    f = write_text(tmp_path / "d.csv", "x,cls\n1,yes\n2,no\n3,yes\n")
    d = load_csv(f)
    assert d.label_names == ("yes", "no")
    assert d.y.tolist() == [0, 1, 0]


def test_label_column_by_name_and_index(tmp_path):
    f = write_text(tmp_path / "d.csv", "cls,a,b\nx,1,2\ny,3,4\n")
    by_name = load_csv(f, "cls")
    by_index = load_csv(f, 0)
    assert by_name == by_index
    assert by_name.feature_names == ("a", "b")


def test_non_numeric_cell_names_row_and_column(tmp_path):
    f = write_text(tmp_path / "d.csv", "a,b,label\n0,0,0\n1,x,0\n")
    with pytest.raises(NonNumericCellError, match=r"row 3.*'b'"):
        load_csv(f)


@pytest.mark.parametrize(
    "content, error",
    [
        ("a,b,label\n0,0,0\n1,1\n", RaggedRowError),
        ("a,b,label\n0,0,0\n", TooFewRowsError),
        ("", TooFewRowsError),
        ("a,b,label\n0,,0\n1,1,1\n", MissingValueError),
        ("a,b,label\n0,nan,0\n1,1,1\n", NonNumericCellError),
        ("a,b,label\n0,inf,0\n1,1,1\n", NonNumericCellError),
    ],
)
def test_malformed_files(tmp_path, content, error):
    f = write_text(tmp_path / "d.csv", content)
    with pytest.raises(error):
        load_csv(f)


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        load_csv(tmp_path / "nope.csv")
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 12).flatmap(
        lambda rows: st.tuples(
            st.lists(st.lists(finite, min_size=3, max_size=3), min_size=rows, max_size=rows),
            st.lists(st.sampled_from(["a", "b", "c"]), min_size=rows, max_size=rows),
        )
    )
)
def test_csv_round_trip(tmp_path_factory, table):
    rows, labels = table
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    with open(path, "w") as fh:
        fh.write("f0,f1,f2,label\n")
        for r, lab in zip(rows, labels):
            fh.write(",".join(format(v, ".17g") for v in r) + f",{lab}\n")
    first = load_csv(path)
    out = path.with_name("out.csv")
    write_csv(first, out)
    assert load_csv(out) == first
    np.testing.assert_array_equal(first.X, np.array(rows))


def test_synthetic_column_round_trip(tmp_path, binary_data):
    d = binary_data.append(np.ones((3, 2)), 1)
    write_csv(d, tmp_path / "s.csv", synthetic_column=True)
    back = load_csv(tmp_path / "s.csv")
    assert back.synthetic.sum() == 3
    assert back.n_features == 2
    assert back.label_names == d.label_names


def test_dataset_is_immutable(binary_data):
    with pytest.raises(ValueError):
        binary_data.X[0, 0] = 1.0


def test_split_by_class_minority():
    X = np.arange(13, dtype=float)[:, None]
    d = Dataset(X, np.r_[np.zeros(10, int), np.ones(3, int)])
    s = split_by_class(d)
    assert s.minority_label == 1 and s.minority.size == 3


def test_split_by_class_tie_picks_smaller_id():
    d = Dataset(np.zeros((10, 1)), np.r_[np.ones(5, int), np.zeros(5, int)])
    s = split_by_class(d)
    assert s.minority_label == 0 and s.minority.size == 5


@pytest.mark.parametrize("labels", [[0, 0, 0], [0, 1, 2]])
def test_split_by_class_needs_two_labels(labels):
    with pytest.raises(ClassCountError):
        split_by_class(Dataset(np.zeros((3, 1)), np.array(labels)))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=60).filter(lambda v: len(set(v)) == 2))
def test_split_partitions_exactly(labels):
    X = np.arange(len(labels), dtype=float)[:, None]
    d = Dataset(X, np.array(labels))
    s = split_by_class(d)
    counts = {c: labels.count(c) for c in (0, 1)}
    assert s.minority.size + s.majority.size == len(labels)
    assert s.minority.size == min(counts.values())
    joined = np.sort(np.concatenate([s.minority.X[:, 0], s.majority.X[:, 0]]))
    np.testing.assert_array_equal(joined, X[:, 0])
    assert s.minority.size <= s.majority.size


def _degree(n_major, n_minor):
    return imbalance_degree(Dataset(np.zeros((n_major + n_minor, 1)),
                                    np.r_[np.zeros(n_major, int), np.ones(n_minor, int)]))


@pytest.mark.parametrize(
    "severe, non_severe, expected",
    [(1071, 384, 2.789), (273, 66, 4.136), (789, 306, 2.578), (702, 99, 7.091)],
)
def test_imbalance_degree_bug_report_table(severe, non_severe, expected):
    assert round(_degree(severe, non_severe), 3) == pytest.approx(expected, abs=1e-3)


def test_imbalance_degree_balanced():
    assert _degree(7, 7) == 1.0


@given(st.integers(1, 500), st.integers(1, 500))
def test_imbalance_degree_at_least_one(a, b):
    deg = _degree(a, b)
    assert deg >= 1.0
    assert (deg == 1.0) == (a == b)


def test_imbalance_degree_empty_class():
    with pytest.raises(ClassCountError):
        imbalance_degree(Dataset(np.zeros((3, 1)), np.zeros(3, int)))


def test_stratified_exact_proportion():
    d = Dataset(np.arange(200.0)[:, None], np.r_[np.zeros(100, int), np.ones(100, int)])
    train, test = stratified_split(d, 0.2, 1)
    assert test.class_counts() == {0: 20, 1: 20}
    assert train.class_counts() == {0: 80, 1: 80}
    both = np.sort(np.concatenate([train.X[:, 0], test.X[:, 0]]))
    np.testing.assert_array_equal(both, d.X[:, 0])


def test_stratified_deterministic(binary_data):
    a = stratified_split(binary_data, 0.3, 11)
    b = stratified_split(binary_data, 0.3, 11)
    assert a[0] == b[0] and a[1] == b[1]


def test_stratified_rounding_within_one():
    d = Dataset(np.zeros((110, 1)), np.r_[np.zeros(97, int), np.ones(13, int)])
    _, test = stratified_split(d, 0.25, 0)
    counts = test.class_counts()
    # every reasonable rounding rule (floor, ceil, nearest) lands within one instance
    for n, got in ((97, counts[0]), (13, counts[1])):
        exact = n * 0.25
        candidates = {math.floor(exact), math.ceil(exact), round(exact)}
        assert got in candidates
        assert abs(got - exact) <= 1


def test_stratified_needs_two_per_class():
    d = Dataset(np.zeros((5, 1)), np.r_[np.zeros(4, int), np.ones(1, int)])
    with pytest.raises(ClassCountError):
        stratified_split(d, 0.5, 0)


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1])
def test_stratified_fraction_range(binary_data, fraction):
    with pytest.raises(ValueError):
        stratified_split(binary_data, fraction, 0)
