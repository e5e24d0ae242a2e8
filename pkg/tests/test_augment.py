import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphaudit.augment import (
    AugKind,
    AugmentationSpec,
    ContextAugConfig,
    apply,
    apply_context,
    apply_dataset,
    attribute_mask,
    build_cooccurrence,
    colorize,
    count,
    edge_perturb,
    feature_swap,
    node_drop,
    random_delete_rewire,
    random_insert,
    subgraph_sample,
    synonym_replace,
)
from graphaudit.graph import Graph, GraphDataset, structurally_equal, validate
from graphaudit.io import Document, EmbeddingTable
from graphaudit.rng import derive_seed

from graphgen import complete, path, random_graph, star

TABLE = EmbeddingTable(["cat", "dog", "sat"], np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]]))


def seeds(k=40):
    return range(k)


class TestCountRule:
    def test_floor(self):
        assert count(0.2, 5) == 1
        assert count(0.29, 100) == 29
        assert count(0.34, 3) == 1
        assert count(0.0, 10) == 0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            count(1.5, 3)

    def test_split_seed_distinct(self):
        base = 12345
        derived = {derive_seed(base, i) for i in range(10000)}
        assert len(derived) == 10000
        assert derive_seed(base, 0) == base


class TestNodeDrop:
    def test_five_nodes(self):
        g = random_graph(np.random.default_rng(0), n=5)
        assert node_drop(g, 0.2, 3).num_nodes == 4

    def test_ratio_zero_identity(self):
        g = random_graph(np.random.default_rng(1), n=7)
        assert structurally_equal(node_drop(g, 0.0, 9), g)

    def test_triangle_always_one_edge(self):
        for s in seeds():
            out = node_drop(complete(3), 0.34, s)
            assert (out.num_nodes, out.num_edges) == (2, 1)

    def test_never_empties(self):
        g = path(4)
        assert node_drop(g, 1.0, 0).num_nodes == 1
        assert structurally_equal(node_drop(path(1), 1.0, 0), path(1))

    def test_features_follow_nodes(self):
        x = np.arange(6.0).reshape(6, 1)
        g = Graph.from_edges(x, [(i, i + 1) for i in range(5)])
        out = node_drop(g, 0.5, 4)
        kept = out.node_features[:, 0].astype(int)
        assert np.all(np.diff(kept) > 0)  # relative order preserved
        assert out.edge_set() == {(i, j) for i, j in itertools.combinations(range(3), 2)
                                  if kept[j] == kept[i] + 1}


class TestEdgePerturb:
    def test_ratio_zero_identity(self):
        g = random_graph(np.random.default_rng(2), n=6, p=0.5)
        assert structurally_equal(edge_perturb(g, 0.0, 1), g)

    def test_complete_graph_only_removes(self):
        for s in seeds():
            out = edge_perturb(complete(3), 0.34, s)
            assert out.num_edges == 2
            assert out.edge_set() < complete(3).edge_set()

    def test_path_swaps_one_edge(self):
        for s in seeds():
            out = edge_perturb(path(3), 0.5, s)
            assert out.num_edges == 2
            assert (0, 2) in out.edge_set()

    def test_additions_from_original_non_edges(self):
        rng = np.random.default_rng(5)
        for s in seeds():
            g = random_graph(rng, n=8, p=0.4)
            out = edge_perturb(g, 0.5, s)
            r = count(0.5, g.num_edges)
            added = out.edge_set() - g.edge_set()
            removed = g.edge_set() - out.edge_set()
            assert len(removed) == r
            assert len(added) == min(r, 8 * 7 // 2 - g.num_edges)
            np.testing.assert_array_equal(out.node_features, g.node_features)


class TestAttributeMask:
    def test_ratio_zero_identity(self):
        g = random_graph(np.random.default_rng(3), n=5)
        assert structurally_equal(attribute_mask(g, 0.0, 0), g)

    def test_ratio_one_masks_all(self):
        g = random_graph(np.random.default_rng(3), n=5)
        np.testing.assert_array_equal(attribute_mask(g, 1.0, 0, mask_value=-2.0).node_features, -2.0)

    def test_two_nodes_half(self):
        g = Graph.from_edges([[1.0, 2.0], [3.0, 4.0]], [(0, 1)])
        for s in seeds(10):
            out = attribute_mask(g, 0.5, s)
            masked = np.all(out.node_features == 0.0, axis=1)
            assert masked.sum() == 1
            np.testing.assert_array_equal(out.node_features[~masked], g.node_features[~masked])
            assert out.edge_set() == g.edge_set()


class TestSubgraph:
    def test_p5_one_node(self):
        out = subgraph_sample(path(5), 0.2, 0)
        assert out.num_nodes == 4

    def test_p2_half(self):
        out = subgraph_sample(path(2), 0.5, 1)
        assert (out.num_nodes, out.num_edges) == (1, 0)

    def test_ratio_zero_still_removes_one(self):
        assert subgraph_sample(path(5), 0.0, 2).num_nodes == 4

    def test_rejects_emptying(self):
        with pytest.raises(ValueError):
            subgraph_sample(path(4), 1.0, 0)
        with pytest.raises(ValueError):
            subgraph_sample(path(1), 0.5, 0)

    def test_removed_set_is_walkable(self):
        # removed nodes form whole components plus one connected piece of a component
        rng = np.random.default_rng(11)
        for s in seeds():
            g = random_graph(rng, n=10, p=0.25)
            x = np.arange(10.0).reshape(10, 1)
            g = g.replace(node_features=x)
            out = subgraph_sample(g, 0.6, s)
            assert out.num_nodes == 4
            assert validate(out) == []

    def test_restarts_across_components(self):
        g = Graph.from_edges(np.ones((6, 1)), [(0, 1), (2, 3), (4, 5)])
        for s in seeds(10):
            assert subgraph_sample(g, 0.5, s).num_nodes == 3


class TestCooccurrence:
    def doc(self, text, label=1):
        return Document(text.split(), label)

    def test_window_two(self):
        g = build_cooccurrence(self.doc("the cat sat"), 2, TABLE)
        assert g.num_nodes == 3
        assert g.edge_set() == {(0, 1), (1, 2)}
        assert g.token_count == 3 and g.graph_label == 1

    def test_window_three(self):
        g = build_cooccurrence(self.doc("the cat sat"), 3, TABLE)
        assert g.edge_set() == {(0, 1), (1, 2), (0, 2)}

    def test_repeated_word_weight(self):
        g = build_cooccurrence(self.doc("a b a"), 2, TABLE)
        assert g.num_nodes == 2
        assert g.weight_map() == {(0, 1): 2.0}

    def test_oov_zero_features(self):
        g = build_cooccurrence(self.doc("the cat sat"), 2, TABLE)
        np.testing.assert_array_equal(g.node_features, [[0, 0], [1, 0], [0, 1]])

    def test_window_too_small(self):
        with pytest.raises(ValueError):
            build_cooccurrence(self.doc("a b"), 1, TABLE)

    def test_against_position_oracle(self):
        rng = np.random.default_rng(0)
        vocab = list("abcde")
        for _ in range(50):
            tokens = [vocab[i] for i in rng.integers(0, 5, size=rng.integers(1, 12))]
            w = int(rng.integers(2, 5))
            g = build_cooccurrence(Document(tokens, 0), w, TABLE)
            words = list(dict.fromkeys(tokens))
            expected = Counter()
            for start in range(max(1, len(tokens) - w + 1)):
                win = set(tokens[start:start + w])
                for a, b in itertools.combinations(sorted(win, key=words.index), 2):
                    expected[(words.index(a), words.index(b))] += 1
            assert g.weight_map() == {k: float(v) for k, v in expected.items()}


def text_graph(n=6, token_count=20, seed=0):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n=n, d=2, p=0.5, weighted=True, label=1)
    return g.replace(token_count=token_count)


class TestSynonym:
    def test_ratio_zero(self):
        g = text_graph()
        assert structurally_equal(synonym_replace(g, 0.0, TABLE, 0), g)

    def test_nearest_neighbour(self):
        g = Graph.from_edges([[1.0, 0.0]], token_count=1)
        out = synonym_replace(g, 1.0, TABLE, 0)
        np.testing.assert_array_equal(out.node_features, [[0.9, 0.1]])

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            f = rng.normal(size=2)
            out = synonym_replace(Graph.from_edges([f], token_count=1), 1.0, TABLE, 0)
            cos = TABLE.vectors @ f / (np.linalg.norm(TABLE.vectors, axis=1) * np.linalg.norm(f))
            np.testing.assert_array_equal(out.node_features[0], TABLE.vectors[np.argmax(cos)])

    def test_zero_feature_skipped(self):
        g = Graph.from_edges([[0.0, 0.0], [1.0, 0.0]], [(0, 1)], token_count=2)
        out = synonym_replace(g, 0.5, TABLE, 0)
        assert out.edge_set() == g.edge_set()
        for s in seeds(10):
            out = synonym_replace(g, 1.0, TABLE, s)
            np.testing.assert_array_equal(out.node_features[0], [0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            synonym_replace(path(2, d=3), 0.5, TABLE, 0)

    def test_empty_table(self):
        with pytest.raises(ValueError, match="empty"):
            synonym_replace(path(2, d=2), 0.5, EmbeddingTable([], np.zeros((0, 2))), 0)


class TestInsert:
    def test_ratio_zero(self):
        g = text_graph()
        assert structurally_equal(random_insert(g, 0.0, TABLE, 0), g)

    def test_copies_degree(self):
        # P3 with token_count 1: a single insertion; whichever node is copied, degrees match
        g = path(3, d=2).replace(token_count=1)
        for s in seeds(20):
            out = random_insert(g, 1.0, TABLE, s)
            assert out.num_nodes == 4
            deg_new = sum(3 in e for e in out.edge_set())
            assert deg_new in (1, 2)
            assert any(set(out.neighbors()[3]) == set(g.neighbors()[u]) for u in range(3))
        # copying the middle node gives degree 2
        assert any(random_insert(g, 1.0, TABLE, s).neighbors()[3] == [0, 2] for s in seeds(20))

    def test_single_node(self):
        g = Graph.from_edges([[1.0, 0.0]], token_count=1)
        out = random_insert(g, 1.0, TABLE, 0)
        assert (out.num_nodes, out.num_edges) == (2, 0)

    def test_weights_copied(self):
        g = Graph.from_edges(np.ones((3, 2)), [(0, 1), (1, 2)], [5.0, 7.0], token_count=10)
        out = random_insert(g, 0.5, TABLE, 3)
        w = out.weight_map()
        for v in range(3, out.num_nodes):
            for x in out.neighbors()[v]:
                assert w[(min(x, v), max(x, v))] in (5.0, 7.0)
        assert validate(out) == []


class TestDeleteRewire:
    def test_ratio_zero(self):
        g = text_graph()
        assert structurally_equal(random_delete_rewire(g, 0.0, 0), g)

    def test_path_middle(self):
        g = Graph.from_edges(np.arange(3.0).reshape(3, 1), [(0, 1), (1, 2)], token_count=1)
        hits = 0
        for s in seeds():
            out = random_delete_rewire(g, 1.0, s)
            assert out.num_nodes == 2 and out.num_edges == 1
            if out.node_features[:, 0].tolist() == [0.0, 2.0]:
                hits += 1
        assert hits > 0

    def test_star_center_makes_triangle(self):
        g = star(3).replace(node_features=np.arange(4.0).reshape(4, 1), token_count=1)
        found = False
        for s in seeds():
            out = random_delete_rewire(g, 1.0, s)
            if out.node_features[:, 0].tolist() == [1.0, 2.0, 3.0]:
                assert out.edge_set() == {(0, 1), (0, 2), (1, 2)}
                assert set(out.weight_map().values()) == {1.0}
                found = True
        assert found

    def test_keeps_one_node(self):
        g = complete(3).replace(token_count=50)
        assert random_delete_rewire(g, 1.0, 0).num_nodes == 1


class TestFeatureSwap:
    def test_ratio_zero(self):
        g = text_graph()
        assert structurally_equal(feature_swap(g, 0.0, 0), g)

    def test_two_nodes(self):
        g = Graph.from_edges([[1.0], [2.0]], [(0, 1)], token_count=1, node_labels=[7, 8])
        out = feature_swap(g, 1.0, 0)
        np.testing.assert_array_equal(out.node_features, [[2.0], [1.0]])
        np.testing.assert_array_equal(out.node_labels, [8, 7])

    def test_multiset_preserved(self):
        g = text_graph(n=8, token_count=40)
        out = feature_swap(g, 0.5, 1)
        assert sorted(map(tuple, out.node_features)) == sorted(map(tuple, g.node_features))
        assert out.edge_set() == g.edge_set()


class TestApplyContext:
    def test_all_zero_identity(self):
        g = text_graph()
        cfg = ContextAugConfig(0.0, 0.0, 0.0, 0.0, seed=5)
        assert structurally_equal(apply_context(cfg, g, TABLE), g)

    def test_deterministic(self):
        g = text_graph()
        cfg = ContextAugConfig(0.2, 0.2, 0.2, 0.2, seed=5)
        assert structurally_equal(apply_context(cfg, g, TABLE), apply_context(cfg, g, TABLE))

    def test_node_count(self):
        g = text_graph(n=10, token_count=40)
        cfg = ContextAugConfig(synonym_ratio=0.05, delete_ratio=0.10, insert_ratio=0.05, swap_ratio=0.05, seed=1)
        out = apply_context(cfg, g, TABLE)
        inserted = count(0.05, 40)
        deleted = min(10 + inserted - 1, count(0.10, 40))
        assert out.num_nodes == 10 + inserted - deleted
        assert out.token_count == 40 and out.graph_label == g.graph_label

    def test_parse(self):
        cfg = ContextAugConfig.parse("synonym=0.1, delete=0.2,insert=0.3,swap=0.4", 9)
        assert (cfg.synonym_ratio, cfg.delete_ratio, cfg.insert_ratio, cfg.swap_ratio, cfg.seed) == (0.1, 0.2, 0.3, 0.4, 9)
        with pytest.raises(ValueError):
            ContextAugConfig.parse("shuffle=0.1")
        with pytest.raises(ValueError):
            ContextAugConfig.parse("swap=1.5")


class TestColorize:
    def graph(self):
        x = np.array([[0.5, 1.0, 2.0], [0.25, 3.0, 4.0]])
        return Graph.from_edges(x, [(0, 1)])

    def test_white(self):
        out = colorize(self.graph(), 0, color=(1, 1, 1))
        np.testing.assert_array_equal(out.node_features[:, :3], np.repeat([[0.5], [0.25]], 3, axis=1))
        np.testing.assert_array_equal(out.node_features[:, 3:], [[1.0, 2.0], [3.0, 4.0]])

    def test_black(self):
        out = colorize(self.graph(), 0, color=(0, 0, 0))
        np.testing.assert_array_equal(out.node_features[:, :3], 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**64 - 1))
    def test_positions_preserved(self, seed):
        g = self.graph()
        out = colorize(g, seed)
        assert out.feature_dim == 5
        np.testing.assert_array_equal(out.node_features[:, 3:], g.node_features[:, 1:])
        c = out.node_features[0, :3] / 0.5
        assert np.all((c >= 0) & (c <= 1))
        # one colour per graph
        np.testing.assert_allclose(out.node_features[1, :3], 0.25 * c, rtol=1e-15)
        assert out.edge_set() == g.edge_set()

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            colorize(path(2, d=2), 0)


def dataset(k=4, seed=0):
    rng = np.random.default_rng(seed)
    return GraphDataset([random_graph(rng, n=6, d=3, label=i % 2) for i in range(k)], "D", 2)


class TestDispatch:
    def test_identity_dataset(self):
        ds = dataset()
        out = apply_dataset(AugmentationSpec(AugKind.IDENTITY), ds)
        assert all(structurally_equal(a, b) for a, b in zip(ds, out))

    def test_twice_identical(self):
        ds = dataset()
        spec = AugmentationSpec(AugKind.NODE_DROP, 0.34, 7)
        a, b = apply_dataset(spec, ds), apply_dataset(spec, ds)
        assert all(structurally_equal(x, y) for x, y in zip(a, b))

    def test_threads_do_not_change_results(self):
        ds = dataset(12)
        spec = AugmentationSpec("edge-perturb", 0.3, 3)
        a, b = apply_dataset(spec, ds, threads=1), apply_dataset(spec, ds, threads=4)
        assert all(structurally_equal(x, y) for x, y in zip(a, b))

    def test_order_matters(self):
        g = random_graph(np.random.default_rng(1), n=12, d=2, p=0.4, label=0)
        spec = AugmentationSpec(AugKind.NODE_DROP, 0.5, 11)
        first = apply_dataset(spec, GraphDataset([g, g.copy()], "P", 1))
        # the same graph at index 0 and 1 gets different seeds
        assert not structurally_equal(first[0], first[1])
        assert structurally_equal(first[1], apply(spec, g, seed=derive_seed(11, 1)))

    def test_labels_preserved(self):
        ds = dataset()
        out = apply_dataset(AugmentationSpec(AugKind.SUBGRAPH, 0.2, 1), ds)
        np.testing.assert_array_equal(out.labels, ds.labels)

    def test_schema_mismatch(self):
        ds = dataset()
        with pytest.raises(ValueError, match="colorize"):
            apply_dataset(AugmentationSpec(AugKind.COLORIZE, 0.0, 0), ds.with_graphs([path(2, d=2)]))
        with pytest.raises(ValueError, match="word-embedding table"):
            apply_dataset(AugmentationSpec(AugKind.SYNONYM_REPLACE, 0.1, 0), ds)
        with pytest.raises(ValueError, match="does not match"):
            apply_dataset(AugmentationSpec(AugKind.RANDOM_INSERT, 0.1, 0), ds, TABLE)

    def test_error_names_graph(self):
        ds = GraphDataset([path(3), path(1)], "S", 1)
        with pytest.raises(ValueError, match="graph 1"):
            apply_dataset(AugmentationSpec(AugKind.SUBGRAPH, 0.2, 0), ds)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            AugmentationSpec(AugKind.NODE_DROP, 1.2, 0)
        with pytest.raises(ValueError):
            AugmentationSpec(AugKind.NODE_DROP, 0.2, -1)
        with pytest.raises(ValueError):
            AugmentationSpec("shuffle", 0.2, 0)
