"""Shared test utilities: random posets and compositional sheaves, plus
independent brute-force oracles (chain enumeration, Bareiss ranks, union-find)
that deliberately avoid the library's own elimination code.
"""

from __future__ import annotations

import itertools
import os
import warnings
from fractions import Fraction

import numpy as np

from posheaf.linalg import Matrix, QQ
from posheaf.poset import (
    Poset,
    RedundantCoversWarning,
    build_poset,
    simplicial_complex_poset,
)
from posheaf.sheaf import Sheaf, build_sheaf


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic generator; POSHEAF_SEED shifts every randomized test."""
    base = int(os.environ.get("POSHEAF_SEED", "0") or "0")
    return np.random.default_rng(seed + base)


# ---------------------------------------------------------------------------
# Independent oracles.
# ---------------------------------------------------------------------------

def brute_force_chains(p: Poset) -> list[tuple[str, ...]]:
    """Every chain of the poset, found by filtering all element subsets."""
    chains = []
    elements = list(p.topo_order)
    for r in range(1, len(elements) + 1):
        for combo in itertools.combinations(elements, r):
            if all(p.lt(a, b) for a, b in zip(combo, combo[1:])):
                chains.append(combo)
    return chains


def bareiss_rank(rows: list[list[int]]) -> int:
    """Fraction-free Bareiss elimination rank of an integer matrix."""
    m = [row[:] for row in rows]
    if not m or not m[0]:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    prev = 1
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if m[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                m[i][j] = (m[i][j] * m[r][c] - m[i][c] * m[r][j]) // prev
            m[i][c] = 0
        prev = m[r][c]
        rank += 1
        r += 1
        if r == nrows:
            break
    return rank


def reduced_betti_oracle(p: Poset) -> dict[int, int]:
    """Reduced rational Betti numbers of the order complex of p, via chain
    enumeration and Bareiss ranks only.  Degree -1 included (empty poset)."""
    chains = brute_force_chains(p)
    by_dim: dict[int, list[tuple[str, ...]]] = {}
    for chain in chains:
        by_dim.setdefault(len(chain) - 1, []).append(chain)
    top = max(by_dim) if by_dim else -1
    index = {d: {c: i for i, c in enumerate(by_dim.get(d, []))} for d in range(top + 1)}

    def boundary(dim: int) -> list[list[int]]:
        # rows: (dim-1)-chains (or the single augmentation row when dim == 0)
        cols = by_dim.get(dim, [])
        if dim == 0:
            return [[1] * len(cols)]
        rows = by_dim.get(dim - 1, [])
        mat = [[0] * len(cols) for _ in rows]
        for j, chain in enumerate(cols):
            for i in range(len(chain)):
                face = chain[:i] + chain[i + 1:]
                mat[index[dim - 1][face]][j] = 1 if i % 2 == 0 else -1
        return mat

    betti: dict[int, int] = {}
    ranks = {d: bareiss_rank(boundary(d)) for d in range(top + 1)}
    n_cells = {d: len(by_dim.get(d, [])) for d in range(-1, top + 2)}
    n_cells[-1] = 1
    for d in range(-1, top + 1):
        rank_d = ranks.get(d, 0) if d >= 0 else 0
        rank_up = ranks.get(d + 1, 0)
        betti_d = n_cells.get(d, 0) - rank_d - rank_up
        if betti_d:
            betti[d] = betti_d
    return betti


def union_find_components(n_vertices: int, edges: list[tuple[int, int]]) -> int:
    parent = list(range(n_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(v) for v in range(n_vertices)})


def pad(vec: list[int], n: int) -> list[int]:
    return vec + [0] * (n - len(vec))


def same_betti(a: list[int], b: list[int]) -> bool:
    n = max(len(a), len(b))
    return pad(a, n) == pad(b, n)


# ---------------------------------------------------------------------------
# Random structures.
# ---------------------------------------------------------------------------

def random_dag_poset(rng: np.random.Generator, max_elements: int = 9,
                     chain_cap: int = 60, edge_prob: float = 0.3) -> Poset:
    """Random poset with a bounded order-complex size (keeps Roos tractable)."""
    while True:
        n = int(rng.integers(3, max_elements + 1))
        names = [f"x{i}" for i in range(n)]
        pairs = [
            (names[i], names[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < edge_prob
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RedundantCoversWarning)
            p = build_poset(names, pairs)
        # chain count via DP over the closure
        total = 0
        ending: dict[str, int] = {}
        for e in p.topo_order:
            ending[e] = 1 + sum(ending[d] for d in p.strict_lower(e))
            total += ending[e]
        if total <= chain_cap:
            return p


def random_graph_poset(rng: np.random.Generator, max_vertices: int = 8,
                       edge_prob: float = 0.4) -> tuple[Poset, int, list[tuple[int, int]]]:
    n = int(rng.integers(2, max_vertices + 1))
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob
    ]
    seen = set()
    hyperedges = []
    for (i, j) in edges:
        if (i, j) not in seen:
            seen.add((i, j))
            hyperedges.append([str(i), str(j)])
    from posheaf.poset import hypergraph_to_poset

    p = hypergraph_to_poset([str(i) for i in range(n)], hyperedges)
    return p, n, edges


def random_simplicial_poset(rng: np.random.Generator, max_vertices: int = 5) -> Poset:
    n = int(rng.integers(3, max_vertices + 1))
    vertices = [str(i) for i in range(1, n + 1)]
    simplices = [[v] for v in vertices]
    for combo in itertools.combinations(vertices, 2):
        if rng.random() < 0.5:
            simplices.append(list(combo))
    for combo in itertools.combinations(vertices, 3):
        if rng.random() < 0.2:
            simplices.append(list(combo))
    return simplicial_complex_poset(simplices)


_SCALAR_POOL = [1, -1, 2, -2, Fraction(1, 2), Fraction(-1, 2), 3]


def sheaf_direct_sum(pieces: list[Sheaf]) -> Sheaf:
    """Block-diagonal direct sum of sheaves on the same poset."""
    p = pieces[0].poset
    field = pieces[0].field
    stalks = {e: sum(piece.stalk(e) for piece in pieces) for e in p.elements}
    maps = {}
    for (a, b) in p.hasse_edges():
        rows, cols = stalks[b], stalks[a]
        m = Matrix.zeros(rows, cols, field)
        r0 = c0 = 0
        for piece in pieces:
            block = piece.edge_map[(a, b)]
            for i in range(block.rows):
                for j in range(block.cols):
                    m.data[r0 + i][c0 + j] = block.data[i][j]
            r0 += block.rows
            c0 += block.cols
        maps[(a, b)] = m
    return build_sheaf(p, stalks, maps, field)


def gauge_connection_sheaf(p: Poset, rng: np.random.Generator, field=QQ) -> Sheaf:
    """Rank-1 connection sheaf D(a<b) = [u_b / u_a] from random nonzero scalars
    u_s; transitively compositional by construction."""
    units = {e: Fraction(_SCALAR_POOL[int(rng.integers(0, len(_SCALAR_POOL)))])
             for e in p.elements}
    stalks = {e: 1 for e in p.elements}
    maps = {
        (a, b): Matrix.from_rows([[units[b] / units[a]]], field)
        for (a, b) in p.hasse_edges()
    }
    return build_sheaf(p, stalks, maps, field)


def random_compositional_sheaf(p: Poset, rng: np.random.Generator, field=QQ) -> Sheaf:
    """Direct sum of a gauge connection piece with random cone and Dirac
    pieces: nontrivial stalk dimensions and maps, compositional by
    construction."""
    from posheaf.sheaf import dirac_sheaf, skyscraper_cone_sheaf

    pieces = [gauge_connection_sheaf(p, rng, field)]
    elements = list(p.elements)
    for _ in range(int(rng.integers(0, 3))):
        s = elements[int(rng.integers(0, len(elements)))]
        pieces.append(skyscraper_cone_sheaf(p, s, 1, field))
    for _ in range(int(rng.integers(0, 3))):
        s = elements[int(rng.integers(0, len(elements)))]
        pieces.append(dirac_sheaf(p, s, 1, field))
    return sheaf_direct_sum(pieces)


def random_monotone_map(rng: np.random.Generator, source: Poset,
                        target: Poset) -> dict[str, str]:
    """Random monotone map built by assigning images in topo order, choosing
    each image above all images of already-assigned predecessors."""
    assignment: dict[str, str] = {}
    for s in source.topo_order:
        lower = [assignment[t] for t in source.strict_lower(s)]
        candidates = [
            u for u in target.elements
            if all(target.leq(v, u) for v in lower)
        ]
        if not candidates:
            # no common upper bound: fall back to a constant map
            anchor = target.elements[int(rng.integers(0, len(target.elements)))]
            return {t: anchor for t in source.elements}
        assignment[s] = candidates[int(rng.integers(0, len(candidates)))]
    return assignment
