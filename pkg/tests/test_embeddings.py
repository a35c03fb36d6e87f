import json
import math

import numpy as np
import pytest

from ideal.embeddings import (
    EmbeddingSet,
    cosine,
    load_embeddings,
    normalize,
    save_embeddings,
)


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for rid, vec in rows:
            fh.write(json.dumps({"id": rid, "vector": vec}) + "\n")


def test_load_jsonl_minimal(tmp_path):
    path = tmp_path / "e.jsonl"
    write_jsonl(path, [("a", [1.0, 2.0, 3.0]), ("b", [4.0, 5.0, 6.0])])
    e = load_embeddings(str(path))
    assert e.n == 2 and e.dim == 3
    assert e.ids == ["a", "b"]
    assert e.vectors.dtype == np.float64


def test_load_dimension_mismatch_reports_row(tmp_path):
    path = tmp_path / "e.jsonl"
    write_jsonl(path, [("a", [1.0, 2.0, 3.0]), ("b", [4.0, 5.0, 6.0, 7.0])])
    with pytest.raises(ValueError, match="dimension mismatch at row 2"):
        load_embeddings(str(path))


def test_load_duplicate_id(tmp_path):
    path = tmp_path / "e.jsonl"
    write_jsonl(path, [("a", [1.0]), ("a", [2.0])])
    with pytest.raises(ValueError, match="duplicate id 'a' at row 2"):
        load_embeddings(str(path))


def test_load_non_finite(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text('{"id": "a", "vector": [1.0, NaN]}\n')
    with pytest.raises(ValueError, match="non-finite value at row 1"):
        load_embeddings(str(path))


def test_load_empty_file(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text("")
    with pytest.raises(ValueError, match="empty file"):
        load_embeddings(str(path))


def test_load_rejects_all_zero_row(tmp_path):
    path = tmp_path / "e.jsonl"
    write_jsonl(path, [("a", [1.0, 0.0]), ("z", [0.0, 0.0])])
    with pytest.raises(ValueError, match="all-zero vector at row 2.*'z'"):
        load_embeddings(str(path))


def test_load_pool_of_3000_rows(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "pool.jsonl"
    write_jsonl(
        path,
        [(f"x{i}", rng.normal(size=4).tolist()) for i in range(3000)],
    )
    e = load_embeddings(str(path))
    assert e.n == 3000


@pytest.mark.parametrize("fmt,ext", [("jsonl", "jsonl"), ("csv", "csv")])
def test_text_round_trip(tmp_path, fmt, ext):
    rng = np.random.default_rng(1)
    e = EmbeddingSet(
        ids=[f"id{i}" for i in range(7)], vectors=rng.normal(size=(7, 5))
    )
    path = tmp_path / f"e.{ext}"
    save_embeddings(e, str(path), fmt)
    back = load_embeddings(str(path), fmt)
    assert back.ids == e.ids
    assert np.max(np.abs(back.vectors - e.vectors)) <= 1e-9


def test_raw_f32_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(2)
    data = rng.normal(size=(5, 3)).astype(np.float32)
    first = tmp_path / "a.f32"
    second = tmp_path / "b.f32"
    e = EmbeddingSet(ids=[str(i) for i in range(5)], vectors=data.astype(np.float64))
    save_embeddings(e, str(first), "raw-f32")
    back = load_embeddings(str(first), "raw-f32")
    save_embeddings(back, str(second), "raw-f32")
    assert first.read_bytes() == second.read_bytes()
    assert back.ids == ["0", "1", "2", "3", "4"]
    assert np.array_equal(back.vectors, data.astype(np.float64))


def test_raw_f32_bad_magic_and_truncation(tmp_path):
    path = tmp_path / "bad.f32"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 8)
    with pytest.raises(ValueError, match="bad magic"):
        load_embeddings(str(path))
    path.write_bytes(b"IDEALEMB" + (2).to_bytes(4, "little") + (3).to_bytes(4, "little") + b"\x00" * 4)
    with pytest.raises(ValueError, match="payload length"):
        load_embeddings(str(path))


def test_normalize_three_four_five():
    e = EmbeddingSet(ids=["a"], vectors=np.array([[3.0, 4.0]]))
    unit = normalize(e)
    assert np.allclose(unit.vectors, [[0.6, 0.8]], atol=0, rtol=0)
    assert unit.normalized


def test_normalize_idempotent_and_unit_row_unchanged():
    e = EmbeddingSet(ids=["a", "b"], vectors=np.array([[1.0, 0.0], [0.0, -2.0]]))
    once = normalize(e)
    twice = normalize(once)
    assert twice is once
    assert np.array_equal(once.vectors[0], [1.0, 0.0])


def test_normalize_zero_row_rejected():
    e = EmbeddingSet(ids=["a", "b"], vectors=np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="'b'"):
        normalize(e)


def test_normalize_preserves_pairwise_cosine():
    rng = np.random.default_rng(3)
    e = EmbeddingSet(
        ids=[str(i) for i in range(10)], vectors=rng.normal(size=(10, 6)) * 7.0
    )
    unit = normalize(e)
    for i in range(10):
        for j in range(i + 1, 10):
            raw = cosine(e.vectors[i], e.vectors[j])
            scaled = cosine(unit.vectors[i], unit.vectors[j])
            assert abs(raw - scaled) <= 1e-9


def test_cosine_examples():
    assert cosine([1.0, 0.0], [1.0, 0.0]) == 1.0
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert abs(cosine([1.0, 1.0], [1.0, 0.0]) - 1.0 / math.sqrt(2.0)) <= 1e-12


def test_cosine_symmetric_exactly():
    rng = np.random.default_rng(4)
    for _ in range(50):
        u = rng.normal(size=8)
        v = rng.normal(size=8)
        assert cosine(u, v) == cosine(v, u)


def test_cosine_clamped_and_errors():
    v = np.full(40, 0.1)
    assert cosine(v, v) == 1.0
    assert cosine(v, -v) == -1.0
    with pytest.raises(ValueError, match="zero vector"):
        cosine([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError, match="dimension mismatch"):
        cosine([1.0], [1.0, 2.0])


def test_content_hash_tracks_ids_and_values():
    base = EmbeddingSet(ids=["a", "b"], vectors=np.eye(2))
    same = EmbeddingSet(ids=["a", "b"], vectors=np.eye(2))
    other_id = EmbeddingSet(ids=["a", "c"], vectors=np.eye(2))
    other_val = EmbeddingSet(ids=["a", "b"], vectors=np.eye(2) * 2.0)
    assert base.content_hash() == same.content_hash()
    assert base.content_hash() != other_id.content_hash()
    assert base.content_hash() != other_val.content_hash()
