import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoway import io
from twoway.exceptions import DataError, StructuralError
from twoway.model import BlockStructure, PatternMatrix

from strategies import seeds


@given(st.integers(1, 6), st.integers(1, 6), seeds, st.sampled_from(["M.txt", "M.csv"]))
def test_matrix_round_trip_is_bit_exact(tmp_path_factory, m, n, seed, name):
    M = np.random.default_rng(seed).standard_normal((m, n)) * 10.0 ** np.random.default_rng(
        seed).integers(-300, 300, (m, n))
    path = tmp_path_factory.mktemp("io") / name
    io.write_matrix(path, M)
    back = io.read_matrix(path)
    assert back.tobytes() == M.tobytes()


def test_matrix_text_layout(tmp_path):
    io.write_matrix(tmp_path / "a.txt", [[0.1, 2.0], [3.0, -4.5]])
    assert (tmp_path / "a.txt").read_text() == "2 2\n0.10000000000000001 2\n3 -4.5\n"
    io.write_matrix(tmp_path / "a.csv", [[1.0, 2.0]])
    assert (tmp_path / "a.csv").read_bytes() == b"1,2\r\n"


def test_matrix_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 2\n1 2\n")
    with pytest.raises(DataError):
        io.read_matrix(p)
    p.write_text("2 x\n1 2\n")
    with pytest.raises(DataError):
        io.read_matrix(p)
    p.write_text("1 2\n1 nan\n")
    with pytest.raises(DataError):
        io.read_matrix(p)


def test_pattern_round_trip(tmp_path):
    P = PatternMatrix([[0.2, 0.8], [0.6, 0.4]])
    bs = BlockStructure((2, 1), (1, 2))
    io.write_pattern(tmp_path / "p.json", P, bs)
    doc = json.loads((tmp_path / "p.json").read_text())
    assert set(doc) == {"pattern", "row_sizes", "col_sizes"}
    P2, bs2 = io.read_pattern(tmp_path / "p.json")
    assert P2 == P and bs2 == bs


def test_pattern_errors(tmp_path):
    p = tmp_path / "p.json"
    p.write_text("{not json")
    with pytest.raises(DataError):
        io.read_pattern(p)
    with pytest.raises(DataError):
        io.pattern_from_dict({"pattern": [[1]]})
    with pytest.raises(StructuralError):
        io.pattern_from_dict({"pattern": [[1, 2]], "row_sizes": [2], "col_sizes": [2]})


def test_partition_round_trip(tmp_path):
    io.write_partition(tmp_path / "p.csv", [0, 1, 1, 0])
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "index,label"
    np.testing.assert_array_equal(io.read_partition(tmp_path / "p.csv"), [0, 1, 1, 0])
    (tmp_path / "q.csv").write_text("i,l\n0,0\n")
    with pytest.raises(DataError):
        io.read_partition(tmp_path / "q.csv")


def test_coordinates_and_vectors(tmp_path):
    io.write_coordinates(tmp_path / "c.csv", [[0.5, -1.0]], [3.0])
    assert (tmp_path / "c.csv").read_text() == "index,coord_1,coord_2,weight\n0,0.5,-1,3\n"
    io.write_vector(tmp_path / "v.txt", [3.0, 1.5])
    np.testing.assert_array_equal(io.read_vector(tmp_path / "v.txt"), [3.0, 1.5])
    (tmp_path / "w.txt").write_text("1 a")
    with pytest.raises(DataError):
        io.read_vector(tmp_path / "w.txt")
