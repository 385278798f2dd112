import numpy as np
import pytest

from diffmean.graph import (
    MultiGraph,
    VertexDistribution,
    graph_diffusion_means,
    graph_likelihood,
    read_edge_list,
    transition_matrix,
)


def complete_graph(n):
    c = np.ones((n, n), dtype=int) - np.eye(n, dtype=int)
    return MultiGraph(c)


def path_graph(n):
    c = np.zeros((n, n), dtype=int)
    for i in range(n - 1):
        c[i, i + 1] = c[i + 1, i] = 1
    return MultiGraph(c)


def cycle_graph(n):
    c = np.zeros((n, n), dtype=int)
    for i in range(n):
        c[i, (i + 1) % n] = c[(i + 1) % n, i] = 1
    return MultiGraph(c)


def random_multigraph(rng, n):
    c = rng.integers(0, 3, size=(n, n))
    c = c + c.T
    np.fill_diagonal(c, 0)
    for i in range(n):  # no isolated vertices
        if c[i].sum() == 0:
            j = (i + 1) % n
            c[i, j] = c[j, i] = 1
    return MultiGraph(c)


def brute_force_means(g, t, probs, maximize):
    p = np.asarray(probs, dtype=float)
    pmat = transition_matrix(g)
    acc = np.eye(g.n)
    for _ in range(int(t)):  # naive repeated multiplication oracle
        acc = acc @ pmat
    like = acc @ p
    target = like.max() if maximize else like.min()
    return [i for i in range(g.n) if abs(like[i] - target) <= 1e-12]


class TestTransitionMatrix:
    def test_complete_k3(self):
        P = transition_matrix(complete_graph(3))
        expected = (np.ones((3, 3)) - np.eye(3)) / 2.0
        assert np.allclose(P, expected)

    def test_path_degrees(self):
        P = transition_matrix(path_graph(3))
        assert P[1, 0] == P[1, 2] == 0.5
        assert P[0, 1] == P[2, 1] == 1.0

    def test_row_sums_on_random_graphs(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            g = random_multigraph(rng, int(rng.integers(2, 8)))
            assert np.allclose(transition_matrix(g).sum(axis=1), 1.0, atol=1e-14)

    def test_isolated_vertex_rejected(self):
        with pytest.raises(ValueError):
            MultiGraph(np.zeros((2, 2), dtype=int))

    def test_asymmetry_rejected(self):
        with pytest.raises(ValueError):
            MultiGraph(np.array([[0, 1], [2, 0]]))


class TestGraphLikelihood:
    def test_point_mass_single_step_is_column(self):
        g = complete_graph(4)
        P = transition_matrix(g)
        like = graph_likelihood(g, 1, VertexDistribution.point_mass(4, 2))
        assert np.allclose(like, P[:, 2])

    def test_p3_two_step_by_hand(self):
        g = path_graph(3)
        like = graph_likelihood(g, 2, np.array([0.5, 0.0, 0.5]))
        # P^2 rows: [1/2,0,1/2], [0,1,0], [1/2,0,1/2]
        assert np.allclose(like, [0.5, 0.0, 0.5])

    def test_entries_in_unit_interval(self):
        rng = np.random.default_rng(6)
        g = random_multigraph(rng, 5)
        p = rng.random(5)
        p /= p.sum()
        like = graph_likelihood(g, 3, p)
        assert np.all(like >= 0) and np.all(like <= 1)

    def test_integer_steps_required(self):
        with pytest.raises(ValueError):
            graph_likelihood(path_graph(3), 0, np.array([1.0, 0.0, 0.0]))


class TestGraphDiffusionMeans:
    def test_k3_point_mass_neighbours(self):
        g = complete_graph(3)
        means = graph_diffusion_means(g, 1, VertexDistribution.point_mass(3, 0))
        assert means == [1, 2]

    def test_p3_endpoints_as_printed_gives_middle(self):
        g = path_graph(3)
        means = graph_diffusion_means(g, 2, np.array([0.5, 0.0, 0.5]),
                                      as_printed=True)
        assert means == [1]

    def test_p3_endpoints_default_maximizes(self):
        g = path_graph(3)
        assert graph_diffusion_means(g, 2, np.array([0.5, 0.0, 0.5])) == [0, 2]

    def test_vertex_transitive_uniform_ties(self):
        g = cycle_graph(5)
        means = graph_diffusion_means(g, 3, np.full(5, 0.2))
        assert means == [0, 1, 2, 3, 4]

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(7)
        for trial in range(30):
            n = int(rng.integers(2, 7))
            g = random_multigraph(rng, n)
            p = rng.random(n)
            p /= p.sum()
            for t in range(1, 5):
                for mode in (False, True):
                    assert graph_diffusion_means(g, t, p, as_printed=mode) == (
                        brute_force_means(g, t, p, maximize=not mode)
                    )

    def test_relabeling_equivariance(self):
        rng = np.random.default_rng(8)
        g = random_multigraph(rng, 6)
        p = rng.random(6)
        p /= p.sum()
        perm = rng.permutation(6)
        gp = MultiGraph(g.counts[np.ix_(perm, perm)])
        means = graph_diffusion_means(g, 3, p)
        means_p = graph_diffusion_means(gp, 3, p[perm])
        relabel = {old: new for new, old in enumerate(perm)}
        assert sorted(relabel[i] for i in means) == means_p


class TestEdgeList:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# a path with a doubled edge\n0 1 2\n1 2\n")
        g = read_edge_list(path)
        assert g.n == 3
        assert g.counts[0, 1] == 2
        assert g.counts[1, 2] == 1

    def test_bad_line_reports_number(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\nx y\n")
        with pytest.raises(ValueError, match="2"):
            read_edge_list(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# nothing\n")
        with pytest.raises(ValueError):
            read_edge_list(path)
