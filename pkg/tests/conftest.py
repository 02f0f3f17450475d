from __future__ import annotations

import math

import numpy as np
import pytest

from qrgraph.covering import VertexMap
from qrgraph.generators import (
    gen_cycle,
    gen_cycle_cover,
    gen_grid,
    gen_polar_grid,
    gen_winding,
    identity_map,
)
from qrgraph.spaces import Space


def random_connected_space(rng: np.random.Generator, n: int, extra_edges: int = 2,
                           unit_lengths: bool = False) -> Space:
    """Random tree plus a few chords; random positive lengths and masses."""
    verts = [(f"v{i:02d}", float(rng.uniform(0.2, 2.0))) for i in range(n)]
    edges: list[tuple[str, str, float]] = []
    seen = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        ln = 1.0 if unit_lengths else float(rng.uniform(0.3, 2.0))
        edges.append((f"v{i:02d}", f"v{j:02d}", ln))
        seen.add((j, i))
    for _ in range(extra_edges):
        i, j = sorted(int(x) for x in rng.integers(0, n, size=2))
        if i != j and (i, j) not in seen:
            seen.add((i, j))
            ln = 1.0 if unit_lengths else float(rng.uniform(0.3, 2.0))
            edges.append((f"v{i:02d}", f"v{j:02d}", ln))
    return Space.build(verts, edges, "path")


def random_map(rng: np.random.Generator, n_src: int, n_tgt: int) -> VertexMap:
    """Random surjective edge-compatible map: a random source graph quotiented
    onto n_tgt labels; the target is the induced image graph."""
    src = random_connected_space(rng, n_src, extra_edges=int(rng.integers(1, 4)))
    labels = np.concatenate([
        np.arange(n_tgt),
        rng.integers(0, n_tgt, size=n_src - n_tgt),
    ])
    rng.shuffle(labels)
    t_edges: dict[tuple[int, int], float] = {}
    for i, j, _ln in src.edges:
        a, b = int(labels[i]), int(labels[j])
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key not in t_edges:
            t_edges[key] = float(rng.uniform(0.3, 2.0))
    t_verts = [(f"y{t:02d}", float(rng.uniform(0.2, 2.0))) for t in range(n_tgt)]
    tgt = Space.build(t_verts, [(f"y{a:02d}", f"y{b:02d}", ln) for (a, b), ln in sorted(t_edges.items())], "path")
    assignment = {src.ids[i]: f"y{int(labels[i]):02d}" for i in range(n_src)}
    return VertexMap.build(src, tgt, assignment)


def path_image_diameter_oracle(vm: VertexMap, i: int, j: int) -> float:
    """Exhaustive enumeration of simple paths: min over paths of the image
    diameter.  Independent oracle for the exact pullback metric."""
    best = math.inf
    src = vm.source
    dY = vm.target.dist

    def diam(img: set[int]) -> float:
        pts = sorted(img)
        return max(dY[a, b] for a in pts for b in pts)

    stack = [((i,), {int(vm.f[i])})]
    while stack:
        path, img = stack.pop()
        if path[-1] == j:
            best = min(best, diam(img))
            continue
        for w, _e in src.adj[path[-1]]:
            if w not in path:
                stack.append((path + (w,), img | {int(vm.f[w])}))
    return best


@pytest.fixture(scope="session")
def corpus_maps():
    """The shared map corpus: identities, covers, windings, a stretch."""
    spaces = {
        "cycle8": gen_cycle(8),
        "grid3": gen_grid(3, 3),
        "polar": gen_polar_grid(4, 8, 1.0, math.e),
    }
    stretch_src = Space.build(
        [("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)],
        [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0), ("d", "a", 1.0)],
        "path",
    )
    stretch_tgt = Space.build(
        [("A", 1.0), ("B", 1.0), ("C", 1.0), ("D", 1.0)],
        [("A", "B", 3.0), ("B", "C", 1.0), ("C", "D", 1.0), ("D", "A", 1.0)],
        "path",
    )
    stretch = VertexMap.build(stretch_src, stretch_tgt,
                              {"a": "A", "b": "B", "c": "C", "d": "D"})
    maps = {
        "id_cycle8": identity_map(spaces["cycle8"]),
        "id_grid3": identity_map(spaces["grid3"]),
        "id_polar": identity_map(spaces["polar"]),
        "cover_8_2": gen_cycle_cover(8, 2),
        "cover_5_3": gen_cycle_cover(5, 3),
        "cover_16_2": gen_cycle_cover(16, 2),
        "w2": gen_winding(2, levels=4, sectors=8),
        "w3": gen_winding(3, levels=3, sectors=8),
        "stretch": stretch,
    }
    return maps


@pytest.fixture(scope="session")
def w2_coarse():
    return gen_winding(2, levels=4, sectors=8)
