import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clide.embedding_store import (
    EmbeddingMatrix,
    EmbeddingVector,
    read_any,
    read_csv,
    read_embf,
    write_csv,
    write_embf,
)
from clide.errors import FormatError, ValidationError


def test_single_row_round_trip(tmp_path):
    path = tmp_path / "m.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0, 2.0]])), path)
    m = read_embf(path)
    assert m.n == 1 and m.d == 2
    assert m.data.tolist() == [[1.0, 2.0]]


def test_write_read_write_byte_identity(tmp_path):
    rng = np.random.default_rng(0)
    m = EmbeddingMatrix(rng.standard_normal((7, 5)), ids=[f"id{i}" for i in range(7)])
    p1, p2 = tmp_path / "a.embf", tmp_path / "b.embf"
    write_embf(m, p1)
    write_embf(read_embf(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_two_writes_identical_bytes(tmp_path):
    m = EmbeddingMatrix(np.array([[0.25, -1.5], [3.0, 4.0]]))
    p1, p2 = tmp_path / "a.embf", tmp_path / "b.embf"
    write_embf(m, p1)
    write_embf(m, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_minimal_matrix_payload(tmp_path):
    path = tmp_path / "one.embf"
    write_embf(EmbeddingMatrix(np.array([[0.0]])), path)
    blob = path.read_bytes()
    # header (20) + one float32 (4) + has_ids byte
    assert len(blob) == 25
    assert blob[:4] == b"EMBF"
    assert blob[-1] == 0


def test_ids_flag_and_records(tmp_path):
    path = tmp_path / "ids.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0], [2.0]]), ids=["a", "b"]), path)
    blob = path.read_bytes()
    assert blob[20 + 8] == 1  # has_ids
    m = read_embf(path)
    assert m.ids == ["a", "b"]


def test_truncated_payload(tmp_path):
    path = tmp_path / "trunc.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])), path)
    blob = path.read_bytes()
    # keep header plus only two of the three declared rows
    path.write_bytes(blob[: 20 + 2 * 2 * 4])
    with pytest.raises(FormatError):
        read_embf(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0]])), path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="magic"):
        read_embf(path)


def test_bad_version_and_dtype(tmp_path):
    path = tmp_path / "bad.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0]])), path)
    blob = bytearray(path.read_bytes())
    blob[4] = 9
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="version"):
        read_embf(path)
    blob[4] = 1
    blob[5] = 2
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="dtype"):
        read_embf(path)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "trail.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0]])), path)
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(FormatError, match="trailing"):
        read_embf(path)


def test_nan_payload_reports_row(tmp_path):
    path = tmp_path / "nan.embf"
    write_embf(EmbeddingMatrix(np.array([[1.0, 2.0], [3.0, 4.0]])), path)
    blob = bytearray(path.read_bytes())
    blob[20 + 2 * 4 : 20 + 3 * 4] = np.array([np.nan], "<f4").tobytes()
    path.write_bytes(bytes(blob))
    with pytest.raises(ValidationError, match="row 1"):
        read_embf(path)


def test_matrix_validation():
    with pytest.raises(ValidationError):
        EmbeddingMatrix(np.array([[np.inf]]))
    with pytest.raises(ValidationError):
        EmbeddingMatrix(np.empty((0, 3)))
    with pytest.raises(ValidationError):
        EmbeddingMatrix(np.array([1.0, 2.0]))
    with pytest.raises(ValidationError):
        EmbeddingMatrix(np.array([[1.0], [2.0]]), ids=["only-one"])
    with pytest.raises(ValidationError, match="duplicate"):
        EmbeddingMatrix(np.array([[1.0], [2.0]]), ids=["x", "x"])


def test_vector_validation():
    with pytest.raises(ValidationError):
        EmbeddingVector(np.array([1.0, np.nan]))
    v = EmbeddingVector(np.array([1.0, 2.0]))
    assert v.d == 2


def test_csv_plain(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.0,2.0\n3.0,4.0\n")
    m = read_csv(path)
    assert m.n == 2 and m.d == 2 and m.ids is None
    assert m.data.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_with_ids(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("img1,1.0\nimg2,2.0\n")
    m = read_csv(path)
    assert m.n == 2 and m.d == 1
    assert m.ids == ["img1", "img2"]


def test_csv_ragged(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(FormatError, match="ragged"):
        read_csv(path)


def test_csv_bad_token(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(FormatError):
        read_csv(path)


def test_csv_nan_token_rejected(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.0,nan\n")
    with pytest.raises(ValidationError):
        read_csv(path)


def test_csv_empty(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("")
    with pytest.raises(FormatError):
        read_csv(path)


def test_csv_write_read_exact(tmp_path):
    rng = np.random.default_rng(1)
    m = EmbeddingMatrix(rng.standard_normal((5, 3)) * 100, ids=["a", "b", "c", "d", "e"])
    path = tmp_path / "m.csv"
    write_csv(m, path)
    again = read_csv(path)
    # 9 significant digits round-trips float32 exactly
    assert m.equals(again)


def test_read_any_sniffs_format(tmp_path):
    m = EmbeddingMatrix(np.array([[1.0, 2.0]]))
    emb, csvf = tmp_path / "m.embf", tmp_path / "m.csv"
    write_embf(m, emb)
    write_csv(m, csvf)
    assert read_any(emb).equals(m)
    assert read_any(csvf).equals(m)


@settings(max_examples=50, deadline=None)
@given(
    data=st.lists(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, width=32),
            min_size=3,
            max_size=3,
        ),
        min_size=1,
        max_size=8,
    ),
    with_ids=st.booleans(),
)
def test_round_trip_property(tmp_path_factory, data, with_ids):
    arr = np.array(data, dtype=np.float32)
    ids = [f"row-{i}é" for i in range(arr.shape[0])] if with_ids else None
    m = EmbeddingMatrix(arr, ids=ids)
    path = tmp_path_factory.mktemp("rt") / "m.embf"
    write_embf(m, path)
    again = read_embf(path)
    assert again.equals(m)
    assert np.array_equal(again.data.view(np.int32), m.data.view(np.int32))
