import numpy as np
import pytest

from posheaf.errors import EmptySignalSet, NotTwoLayer, ShapeMismatch
from posheaf.linalg import Matrix, QQ, RR
from posheaf.poset import build_poset, hypergraph_to_poset
from posheaf.sheaf import build_sheaf, constant_sheaf, cycle_poset, path_poset
from posheaf.nsd import (
    LearnConfig,
    NsdLayer,
    finite_difference_gradient,
    gcn_forward_oracle,
    graph_laplacian0,
    learn_sheaf,
    nsd_forward,
    nsd_stack,
    sheaf_diffusion_op,
)
from posheaf.spectral import jacobi_eigh

from helpers import random_graph_poset, seeded_rng


def _random_graph_with_edges(rng, max_vertices=8):
    while True:
        p, n, edges = random_graph_poset(rng, max_vertices=max_vertices)
        if edges:
            return p, n, edges


def test_diffusion_op_zero_eta_is_identity():
    s = constant_sheaf(cycle_poset(4), 1, QQ)
    op = sheaf_diffusion_op(s, eta=0.0, norm="none")
    assert np.allclose(op, np.eye(4))


def test_diffusion_op_matches_graph_laplacian():
    rng = seeded_rng(0)
    for _ in range(10):
        p, n, edges = _random_graph_with_edges(rng)
        s = constant_sheaf(p, 1, QQ)
        lap = graph_laplacian0(s, "none")
        # independent dense assembly: degree matrix minus adjacency
        vertices = [e for e in p.topo_order if not p.covered_by(e)]
        index = {v: i for i, v in enumerate(vertices)}
        adjacency = np.zeros((n, n))
        for (a, b) in edges:
            i, j = index[str(a)], index[str(b)]
            adjacency[i, j] += 1
            adjacency[j, i] += 1
        expected = np.diag(adjacency.sum(axis=1)) - adjacency
        assert np.allclose(lap, expected)
        eta = 0.05
        assert np.allclose(
            sheaf_diffusion_op(s, eta, "none"), np.eye(n) - 2 * eta * expected
        )


def test_diffusion_op_fixes_harmonic_states():
    s = constant_sheaf(cycle_poset(5), 1, QQ)
    op = sheaf_diffusion_op(s, eta=0.1, norm="none")
    ones = np.ones(5)
    assert np.allclose(op @ ones, ones)


def test_diffusion_op_eigenvalues_shift():
    s = constant_sheaf(cycle_poset(6), 1, QQ)
    eta = 0.07
    lap = graph_laplacian0(s, "none")
    op = sheaf_diffusion_op(s, eta, "none")
    lam, _ = jacobi_eigh(lap)
    mu, _ = jacobi_eigh(op)
    assert np.allclose(sorted(mu), sorted(1 - 2 * eta * lam), atol=1e-8)


def test_nsd_forward_matches_gcn_oracle_randomized():
    rng = seeded_rng(1)
    for _ in range(20):
        p, n, _ = _random_graph_with_edges(rng)
        s = constant_sheaf(p, 1, QQ)
        f1, f2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        x = rng.standard_normal((n, f1))
        w2 = rng.standard_normal((f1, f2))
        eta = float(rng.uniform(0.01, 0.2))
        for norm in ("none", "weak"):
            layer = NsdLayer(s, np.eye(1), w2, eta=eta, norm=norm)
            ours = nsd_forward(layer, x)
            oracle = gcn_forward_oracle(p, x, w2, eta=eta, norm=norm)
            assert np.max(np.abs(ours - oracle)) <= 1e-12


def test_nsd_forward_zero_w2_gives_half():
    s = constant_sheaf(cycle_poset(4), 1, QQ)
    layer = NsdLayer(s, np.eye(1), np.zeros((2, 3)), eta=0.1)
    out = nsd_forward(layer, np.ones((4, 2)))
    assert np.allclose(out, 0.5)


def test_nsd_forward_harmonic_rows_pass_through_diffusion():
    s = constant_sheaf(cycle_poset(4), 1, QQ)
    w2 = np.array([[2.0]])
    layer = NsdLayer(s, np.eye(1), w2, eta=0.1, norm="none")
    x = np.ones((4, 1))
    out = nsd_forward(layer, x)
    assert np.allclose(out, 1.0 / (1.0 + np.exp(-2.0)))


def test_nsd_forward_shape_checks():
    s = constant_sheaf(cycle_poset(4), 1, QQ)
    layer = NsdLayer(s, np.eye(1), np.eye(2))
    with pytest.raises(ShapeMismatch):
        nsd_forward(layer, np.ones((5, 2)))
    with pytest.raises(ShapeMismatch):
        NsdLayer(s, np.eye(3), np.eye(2))


def test_nsd_layer_rejects_non_uniform_stalks():
    p = path_poset(2)
    maps = {
        ("v0", "e0"): Matrix.from_rows([[1.0], [0.0]], RR),
        ("v1", "e0"): Matrix.from_rows([[1.0, 0.0], [0.0, 1.0]], RR),
    }
    s = build_sheaf(p, {"v0": 1, "v1": 2, "e0": 2}, maps, RR)
    with pytest.raises(ShapeMismatch):
        NsdLayer(s, np.eye(1), np.eye(1))


def test_nsd_rejects_non_graph_poset():
    p = hypergraph_to_poset(["1", "2", "3"], [["1", "2", "3"]])
    s = constant_sheaf(p, 1, QQ)
    with pytest.raises(NotTwoLayer):
        sheaf_diffusion_op(s, 0.1)


def test_nsd_stack_empty_and_single():
    s = constant_sheaf(cycle_poset(4), 1, QQ)
    x = seeded_rng(3).standard_normal((4, 2))
    assert np.allclose(nsd_stack([], x), x)
    layer = NsdLayer(s, np.eye(1), np.eye(2), eta=0.1)
    assert np.allclose(nsd_stack([layer], x), nsd_forward(layer, x))


def test_nsd_stack_two_layers_matches_composed_oracle():
    rng = seeded_rng(5)
    p, n, _ = _random_graph_with_edges(rng)
    s = constant_sheaf(p, 1, QQ)
    w2a = rng.standard_normal((2, 3))
    w2b = rng.standard_normal((3, 2))
    x = rng.standard_normal((n, 2))
    eta = 0.08
    layers = [
        NsdLayer(s, np.eye(1), w2a, eta=eta, norm="weak"),
        NsdLayer(s, np.eye(1), w2b, eta=eta, norm="weak"),
    ]
    ours = nsd_stack(layers, x)
    oracle = gcn_forward_oracle(
        p, gcn_forward_oracle(p, x, w2a, eta=eta, norm="weak"), w2b, eta=eta,
        norm="weak",
    )
    assert np.max(np.abs(ours - oracle)) <= 1e-12


def test_learn_zero_signals_is_immediately_optimal():
    res = learn_sheaf(path_poset(2), [np.zeros(2)], LearnConfig(seed=1))
    assert res.loss_history == [0.0]


def test_learn_rejects_empty_and_misshapen():
    with pytest.raises(EmptySignalSet):
        learn_sheaf(path_poset(2), [], LearnConfig())
    with pytest.raises(Exception):
        learn_sheaf(path_poset(2), [np.zeros(5)], LearnConfig())


def test_learn_single_edge_analytic_minimum():
    # loss (f1 + f2)^2 with |f1| = |f2| = 1: minimum 0 at f1 = -f2
    for seed in range(6):
        res = learn_sheaf(
            path_poset(2), [np.array([1.0, -1.0])], LearnConfig(iters=60, seed=seed)
        )
        assert res.loss_history[-1] <= 1e-6
        f1 = res.sheaf.edge_map[("v0", "e0")].data[0][0]
        f2 = res.sheaf.edge_map[("v1", "e0")].data[0][0]
        assert abs(f1 + f2) <= 1e-3
        assert abs(abs(f1) - 1.0) <= 1e-9


def test_learn_history_monotone():
    rng = seeded_rng(7)
    p, n, _ = _random_graph_with_edges(rng, max_vertices=6)
    signals = [rng.standard_normal(n) for _ in range(3)]
    res = learn_sheaf(p, signals, LearnConfig(iters=40, seed=2))
    for a, b in zip(res.loss_history, res.loss_history[1:]):
        assert b <= a
    for m in res.sheaf.edge_map.values():
        frob = sum(v * v for row in m.data for v in row)
        assert abs(frob - 1.0) <= 1e-9


def _planted_rotation_trial(trial: int) -> tuple[float, float]:
    """Random 6-vertex graph, planted per-vertex rotations (unit Frobenius),
    signals drawn from the planted section space."""
    rng = seeded_rng(5000 + trial)
    n, d = 6, 2
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
    if not edges:
        edges = [(0, 1)]
    p = hypergraph_to_poset(
        [str(i) for i in range(n)], [[str(a), str(b)] for a, b in edges]
    )
    rotations = []
    for _ in range(n):
        phi = rng.uniform(0, 2 * np.pi)
        r = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        rotations.append(r / np.sqrt(2.0))
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    comps = {}
    for v in range(n):
        comps.setdefault(find(v), []).append(v)
    vertices = [e for e in p.topo_order if not p.covered_by(e)]
    signals = []
    for _ in range(6):
        x = np.zeros(n * d)
        for comp in comps.values():
            c = rng.standard_normal(d)
            for v in comp:
                pos = vertices.index(str(v))
                x[pos * d:(pos + 1) * d] = np.linalg.solve(rotations[v], c)
        signals.append(x)
    res = learn_sheaf(p, signals, LearnConfig(iters=300, d=d, seed=trial))
    return res.loss_history[0], res.loss_history[-1]


def test_learn_recovers_planted_sheaf():
    for trial in range(10):
        initial, final = _planted_rotation_trial(trial)
        assert initial > 0
        assert final <= 1e-4 * initial


def test_finite_difference_gradient_on_quadratic():
    rng = seeded_rng(9)
    a = rng.standard_normal((4, 4))
    a = a.T @ a

    def f(x):
        return float(x @ (a @ x))

    for _ in range(5):
        x = rng.standard_normal(4)
        grad = finite_difference_gradient(f, x)
        assert np.allclose(grad, 2 * a @ x, atol=1e-5)
