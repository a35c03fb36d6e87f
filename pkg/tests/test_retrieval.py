import numpy as np
import pytest

from ideal.embeddings import EmbeddingSet, cosine
from ideal.retrieval import build_index, random_retrieve, retrieve, retrieve_scored


def pool(seed, n, d=4):
    rng = np.random.default_rng(seed)
    return EmbeddingSet(ids=[f"p{i:03d}" for i in range(n)], vectors=rng.normal(size=(n, d)))


def oracle_rank(e, annotated, query):
    """Independent full-sort oracle: descending cosine, ties ascending id."""
    sims = {name: cosine(e.vectors[e.index_of(name)], query) for name in annotated}
    return sorted(annotated, key=lambda name: (-sims[name], name))


def test_exact_match_ranks_first():
    e = pool(0, 6)
    idx = build_index(e, ["p001", "p004", "p005"])
    got = retrieve(idx, e.vectors[4], 2)
    assert got[0] == "p004"


def test_c_larger_than_pool_returns_everything_sorted():
    e = pool(1, 5)
    annotated = ["p000", "p002", "p003"]
    idx = build_index(e, annotated)
    query = np.r_[1.0, 0.0, 0.0, 0.0]
    assert retrieve(idx, query, 50) == oracle_rank(e, annotated, query)


def test_five_vector_pool_matches_full_sort():
    e = pool(2, 5)
    annotated = [f"p{i:03d}" for i in range(5)]
    idx = build_index(e, annotated)
    rng = np.random.default_rng(3)
    for _ in range(20):
        q = rng.normal(size=4)
        assert retrieve(idx, q, 3) == oracle_rank(e, annotated, q)[:3]


def test_retrieve_many_random_pools_against_oracle():
    rng = np.random.default_rng(4)
    for _ in range(60):
        n = int(rng.integers(1, 40))
        d = int(rng.integers(2, 8))
        e = pool(int(rng.integers(1 << 30)), n, d)
        size = int(rng.integers(1, n + 1))
        annotated = [e.ids[i] for i in rng.choice(n, size=size, replace=False)]
        idx = build_index(e, annotated)
        q = rng.normal(size=d)
        c = int(rng.integers(1, size + 2))
        got = retrieve(idx, q, c)
        assert got == oracle_rank(e, annotated, q)[:c]
        assert len(set(got)) == len(got)
        assert set(got) <= set(annotated)


def test_tie_breaks_ascending_id():
    vecs = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    e = EmbeddingSet(ids=["b", "a", "c"], vectors=vecs)
    idx = build_index(e, ["b", "a", "c"])
    assert retrieve(idx, np.r_[1.0, 0.0], 3) == ["a", "b", "c"]


def test_scored_similarities_clamped_and_sorted():
    e = pool(5, 10)
    idx = build_index(e, [f"p{i:03d}" for i in range(10)])
    scored = retrieve_scored(idx, e.vectors[0], 10)
    sims = [s for _, s in scored]
    assert all(-1.0 <= s <= 1.0 for s in sims)
    assert sims == sorted(sims, reverse=True)


def test_retrieve_errors():
    e = pool(6, 4)
    idx = build_index(e, ["p000", "p001"])
    with pytest.raises(ValueError, match="dimension"):
        retrieve(idx, np.r_[1.0, 2.0], 1)
    with pytest.raises(ValueError, match="c must be"):
        retrieve(idx, e.vectors[0], 0)
    with pytest.raises(ValueError, match="zero query"):
        retrieve(idx, np.zeros(4), 1)
    with pytest.raises(ValueError, match="unknown annotated id"):
        build_index(e, ["nope"])
    with pytest.raises(ValueError, match="nonempty"):
        build_index(e, [])


def test_random_retrieve_deterministic_and_complete():
    e = pool(7, 6)
    idx = build_index(e, [f"p{i:03d}" for i in range(6)])
    a = random_retrieve(idx, 4, seed=11)
    b = random_retrieve(idx, 4, seed=11)
    assert a == b and len(set(a)) == 4
    whole = random_retrieve(idx, 6, seed=0)
    assert sorted(whole) == sorted(idx.ids)


def test_random_retrieve_singleton_pool():
    e = pool(8, 3)
    idx = build_index(e, ["p002"])
    assert random_retrieve(idx, 1, seed=0) == ["p002"]
