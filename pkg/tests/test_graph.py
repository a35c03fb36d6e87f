import math

import numpy as np
import pytest

from ideal.embeddings import EmbeddingSet, cosine
from ideal.graph import DiffusionGraph, build_graph, knn_successors, load_graph, save_graph


def angled(degrees):
    rad = [math.radians(d) for d in degrees]
    return np.array([[math.cos(r), math.sin(r)] for r in rad])


def random_pool(seed, n, d=5):
    rng = np.random.default_rng(seed)
    return EmbeddingSet(ids=[str(i) for i in range(n)], vectors=rng.normal(size=(n, d)))


def test_knn_two_vertices_forced():
    e = random_pool(0, 2)
    assert knn_successors(e, 0, 5) == [1]
    assert knn_successors(e, 1, 1) == [0]


def test_knn_angled_example():
    # query vertex 0; others at 10, 90, 180 degrees: nearest two are 10 and 90
    e = EmbeddingSet(ids=list("qabc"), vectors=angled([0, 10, 90, 180]))
    assert knn_successors(e, 0, 2) == [1, 2]


def test_knn_tie_breaks_by_ascending_index():
    vecs = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 1.0], [-1.0, 0.5]])
    e = EmbeddingSet(ids=list("abcd"), vectors=vecs)
    assert knn_successors(e, 0, 2) == [1, 2]


def test_knn_out_of_range():
    e = random_pool(1, 3)
    with pytest.raises(ValueError, match="out of range"):
        knn_successors(e, 3, 1)
    with pytest.raises(ValueError, match="k must be"):
        knn_successors(e, 0, 0)


def test_knn_matches_brute_force_sort():
    e = random_pool(2, 50, d=7)
    for v in range(e.n):
        ranked = sorted(
            (u for u in range(e.n) if u != v),
            key=lambda u: (-cosine(e.vectors[v], e.vectors[u]), u),
        )
        assert knn_successors(e, v, 6) == ranked[:6]


def test_build_identical_vectors_uniform_weights():
    e = EmbeddingSet(ids=list("abc"), vectors=np.tile([0.6, 0.8], (3, 1)))
    g = build_graph(e, k=2)
    for v in range(3):
        succ = g.successors(v)
        assert [u for u, _ in succ] == sorted(u for u in range(3) if u != v)
        assert all(p == 0.5 for _, p in succ)


def test_build_weight_formula():
    # cosines from vertex 0: 0.8 to vertex 1, 0.2 to vertex 2
    vecs = np.array([[1.0, 0.0], [0.8, 0.6], [0.2, math.sqrt(1 - 0.04)]])
    e = EmbeddingSet(ids=list("abc"), vectors=vecs)
    g = build_graph(e, k=2)
    succ = dict(g.successors(0))
    assert abs(succ[1] - 0.8) <= 1e-12
    assert abs(succ[2] - 0.2) <= 1e-12


def test_build_default_k_is_10():
    e = random_pool(3, 14)
    g = build_graph(e)
    assert g.k == 10
    assert all(g.out_degree(v) == 10 for v in range(e.n))


def test_negative_cosines_clamped_to_zero_mass():
    vecs = np.array([[1.0, 0.0], [-1.0, 0.1], [-1.0, -0.1]])
    e = EmbeddingSet(ids=list("abc"), vectors=vecs)
    g = build_graph(e, k=2)
    succ = g.successors(0)
    assert [u for u, _ in succ] == [1, 2]  # zero-mass ties by ascending index
    assert all(p == 0.0 for _, p in succ)
    g.validate()


def test_probabilities_sum_to_one_or_zero():
    e = random_pool(4, 40, d=6)
    g = build_graph(e, k=5)
    for v in range(e.n):
        mass = sum(p for _, p in g.successors(v))
        assert mass == 0.0 or abs(mass - 1.0) <= 1e-9


def test_out_degree_capped_by_pool_size():
    e = random_pool(5, 4)
    g = build_graph(e, k=10)
    assert all(g.out_degree(v) == 3 for v in range(4))


def test_successor_order_probability_desc_then_index():
    e = random_pool(6, 30, d=4)
    g = build_graph(e, k=6)
    for v in range(e.n):
        succ = g.successors(v)
        keys = [(-p, u) for u, p in succ]
        assert keys == sorted(keys)


def test_build_requires_two_vertices_and_positive_k():
    e = random_pool(7, 1)
    with pytest.raises(ValueError, match="at least 2"):
        build_graph(e, k=1)
    with pytest.raises(ValueError, match="k must be"):
        build_graph(random_pool(8, 3), k=0)


def test_serialization_round_trip_and_format(tmp_path):
    e = random_pool(9, 12, d=3)
    g = build_graph(e, k=4)
    path = tmp_path / "g.graph"
    save_graph(g, str(path))
    text = path.read_text().splitlines()
    assert text[0] == f"IDEALGRAPH v1 n=12 k=4 hash={e.content_hash()}"
    assert len(text) == 1 + g.num_edges
    src_order = [int(line.split("\t")[0]) for line in text[1:]]
    assert src_order == sorted(src_order)
    back = load_graph(str(path))
    second = tmp_path / "g2.graph"
    save_graph(back, str(second))
    assert path.read_bytes() == second.read_bytes()
    assert back.built_from == g.built_from


def test_build_deterministic_bytes(tmp_path):
    e = random_pool(10, 25, d=8)
    a, b = tmp_path / "a.graph", tmp_path / "b.graph"
    save_graph(build_graph(e, k=5), str(a))
    save_graph(build_graph(e, k=5), str(b))
    assert a.read_bytes() == b.read_bytes()


def test_from_edges_validation():
    with pytest.raises(ValueError, match="self-edge"):
        DiffusionGraph.from_edges(2, [(0, 0, 0.5)])
    with pytest.raises(ValueError, match="outside"):
        DiffusionGraph.from_edges(2, [(0, 1, 1.5)])
    with pytest.raises(ValueError, match="out of range"):
        DiffusionGraph.from_edges(2, [(0, 2, 0.5)])
    g = DiffusionGraph.from_edges(3, [(0, 2, 0.25), (0, 1, 0.75)])
    assert g.successors(0) == [(1, 0.75), (2, 0.25)]
