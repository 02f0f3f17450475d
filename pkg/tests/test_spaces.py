from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_connected_space
from qrgraph.spaces import (
    Continuum,
    Curve,
    Space,
    ValidationError,
    ball,
    ball_closed,
    bounded_turning_constant,
    components,
    diameter,
    doubling_constant,
    path_metric,
)


def _path3():
    return Space.build([("a", 1), ("b", 1), ("c", 1)],
                       [("a", "b", 1.0), ("b", "c", 1.0)], "path")


def _cycle4(lens=(1.0, 1.0, 1.0, 1.0)):
    ids = ["a", "b", "c", "d"]
    edges = [(ids[i], ids[(i + 1) % 4], lens[i]) for i in range(4)]
    return Space.build([(v, 1.0) for v in ids], edges, "path")


def brute_force_shortest(space: Space, i: int, j: int) -> float:
    """All simple paths, minimum total length."""
    best = math.inf
    stack = [((i,), 0.0)]
    while stack:
        path, ln = stack.pop()
        if path[-1] == j:
            best = min(best, ln)
            continue
        for w, e in space.adj[path[-1]]:
            if w not in path:
                stack.append((path + (w,), ln + space.edge_length(e)))
    return best


class TestPathMetric:
    def test_path_graph_concatenation(self):
        sp = _path3()
        assert sp.d("a", "c") == 2.0

    def test_single_vertex(self):
        sp = Space.build([("v", 1.0)], [], "path")
        assert sp.d("v", "v") == 0.0

    def test_four_cycle_against_brute_force(self):
        sp = _cycle4()
        d = path_metric(sp)
        for i in range(4):
            for j in range(4):
                assert d[i, j] == pytest.approx(brute_force_shortest(sp, i, j) if i != j else 0.0)
        assert d[0, 2] == 2.0

    def test_disconnected_rejected(self):
        with pytest.raises(ValidationError, match="disconnected"):
            Space.build([("a", 1), ("b", 1), ("c", 1)], [("a", "b", 1.0)], "path")

    def test_random_graphs_pass_invariants(self):
        # spec invariant: 1000 random graphs, path metric passes the checker
        rng = np.random.default_rng(7)
        for _ in range(1000):
            sp = random_connected_space(rng, int(rng.integers(2, 9)))
            assert sp.validate() == []


class TestBalls:
    def test_open_ball_r0_empty(self):
        sp = _path3()
        assert ball(sp, "b", 0.0) == frozenset()

    def test_ball_beyond_diameter_is_everything(self):
        sp = _path3()
        assert ball(sp, "a", 100.0) == frozenset(range(3))

    def test_unit_path_center_r15(self):
        sp = _path3()
        assert ball(sp, "b", 1.5) == sp.subset(["a", "b", "c"])

    def test_open_vs_closed(self):
        sp = _path3()
        assert ball(sp, "a", 1.0) == sp.subset(["a"])
        assert ball_closed(sp, "a", 1.0) == sp.subset(["a", "b"])

    def test_monotone_in_radius(self):
        sp = _cycle4((1.0, 2.0, 0.5, 1.5))
        radii = sorted({float(x) for x in sp.dist.flatten()} | {0.3, 5.0})
        for r1, r2 in zip(radii, radii[1:]):
            assert ball(sp, "a", r1) <= ball(sp, "a", r2)


class TestComponents:
    def test_connected_input_single_component(self):
        sp = _cycle4()
        comps = components(sp, range(4))
        assert len(comps) == 1 and comps[0].members == frozenset(range(4))

    def test_empty_input(self):
        assert components(_cycle4(), []) == []

    def test_path_with_middle_removed(self):
        sp = Space.build([(v, 1.0) for v in "abcd"],
                         [("a", "b", 1), ("b", "c", 1), ("c", "d", 1)], "path")
        comps = components(sp, ["a", "d"])
        assert len(comps) == 2

    def test_partition_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            sp = random_connected_space(rng, 8)
            subset = [v for v in range(8) if rng.random() < 0.5]
            comps = components(sp, subset)
            union = frozenset().union(*[c.members for c in comps]) if comps else frozenset()
            assert union == frozenset(subset)
            for a, b in itertools.combinations(comps, 2):
                assert a.members.isdisjoint(b.members)


class TestDiameter:
    def test_singleton(self):
        assert diameter(_path3(), ["a"]) == 0.0

    def test_whole_unit_4cycle(self):
        assert diameter(_cycle4(), range(4)) == 2.0

    def test_one_pair_edge_length_3(self):
        sp = Space.build([("a", 1), ("b", 1)], [("a", "b", 3.0)], "path")
        assert diameter(sp, ["a", "b"]) == 3.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            diameter(_path3(), [])

    def test_bounded_by_total_edge_length(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            sp = random_connected_space(rng, 7)
            total = sum(ln for _i, _j, ln in sp.edges)
            assert diameter(sp, range(sp.n)) <= total + 1e-9


def brute_force_separated(space: Space, pts: list[int], sep: float) -> int:
    best = 0
    for r in range(1, len(pts) + 1):
        for sub in itertools.combinations(pts, r):
            if all(space.dist[a, b] >= sep - 1e-9
                   for a, b in itertools.combinations(sub, 2)):
                best = max(best, r)
    return best


class TestDoubling:
    def test_single_vertex(self):
        sp = Space.build([("v", 2.0)], [], "path")
        assert doubling_constant(sp).value in (0, 1)

    def test_two_vertices_distance_one(self):
        sp = Space.build([("a", 1), ("b", 1)], [("a", "b", 1.0)], "path")
        res = doubling_constant(sp)
        assert res.value == 2 and res.exact

    def test_eight_cycle_exact_vs_bruteforce(self):
        sp = Space.build([(f"c{i}", 1.0) for i in range(8)],
                         [(f"c{i}", f"c{(i + 1) % 8}", 1.0) for i in range(8)], "path")
        res = doubling_constant(sp)
        # independent search over every center/radius
        best = 1
        radii = sorted({float(x) for x in sp.dist.flatten() if x > 0})
        sweep = [(a + b) / 2 for a, b in zip(radii, radii[1:])] + [radii[-1] + 1.0]
        for c in range(8):
            for r in sweep:
                pts = [v for v in range(8) if sp.dist[c, v] < r - 1e-9]
                best = max(best, brute_force_separated(sp, pts, r / 2.0))
        assert res.exact and res.value == best

    def test_greedy_lower_bounds_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            sp = random_connected_space(rng, 9)
            exact = doubling_constant(sp, exact_cap=16)
            greedy = doubling_constant(sp, exact_cap=0)
            assert not greedy.exact and exact.exact
            assert greedy.value <= exact.value

    def test_greedy_agrees_on_unit_8_cycle(self):
        sp = Space.build([(f"c{i}", 1.0) for i in range(8)],
                         [(f"c{i}", f"c{(i + 1) % 8}", 1.0) for i in range(8)], "path")
        exact = doubling_constant(sp, exact_cap=16)
        greedy = doubling_constant(sp, exact_cap=0)
        assert greedy.value == exact.value


class TestBoundedTurning:
    def test_path_metric_space_is_one(self):
        assert bounded_turning_constant(_cycle4()) == (1.0, 1.0)

    def test_cycle_with_long_edge_path_metric(self):
        sp = _cycle4((10.0, 1.0, 1.0, 1.0))
        assert bounded_turning_constant(sp) == (1.0, 1.0)

    def test_explicit_dist_bracket_contains_exact(self):
        # square with explicit Euclidean-ish metric: the graph path between
        # opposite corners has diameter sqrt(2) * side over distance sqrt(2)
        ids = ["a", "b", "c", "d"]
        pos = {"a": (0, 0), "b": (1, 0), "c": (1, 1), "d": (0, 1)}
        dist = np.array([[math.dist(pos[u], pos[v]) for v in ids] for u in ids])
        sp = Space.build([(v, 1.0) for v in ids],
                         [("a", "b", 1), ("b", "c", 1), ("c", "d", 1), ("d", "a", 1)],
                         dist)
        lo, hi = bounded_turning_constant(sp)
        # exact constant via exhaustive simple-path enumeration
        exact = 1.0
        for i in range(4):
            for j in range(i + 1, 4):
                best = math.inf
                stack = [(i,)]
                while stack:
                    path = stack.pop()
                    if path[-1] == j:
                        pts = list(path)
                        best = min(best, max(dist[a, b] for a in pts for b in pts))
                        continue
                    for w, _e in sp.adj[path[-1]]:
                        if w not in path:
                            stack.append(path + (w,))
                exact = max(exact, best / dist[i, j])
        assert lo <= exact + 1e-9 <= hi + 1e-9


class TestCurveAndContinuum:
    def test_curve_length(self):
        sp = _cycle4((1.0, 2.0, 3.0, 4.0))
        c = Curve.from_ids(sp, ["a", "b", "c"])
        assert c.length == 3.0

    def test_curve_rejects_nonadjacent(self):
        with pytest.raises(ValidationError):
            Curve.from_ids(_path3(), ["a", "c"])

    def test_continuum_rejects_disconnected(self):
        sp = Space.build([(v, 1.0) for v in "abcd"],
                         [("a", "b", 1), ("b", "c", 1), ("c", "d", 1)], "path")
        with pytest.raises(ValidationError):
            Continuum(sp, frozenset({0, 3}))


def test_space_is_immutable():
    sp = _cycle4()
    with pytest.raises(ValueError):
        sp.dist[0, 1] = 5.0
    with pytest.raises(ValueError):
        sp.mass[0] = 2.0
    with pytest.raises(Exception):
        sp.ids = ("x",)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=5),
       st.integers(min_value=0, max_value=10_000))
def test_path_metric_is_metric(n, extra, seed):
    rng = np.random.default_rng(seed)
    sp = random_connected_space(rng, n, extra_edges=extra)
    d = sp.dist
    assert np.allclose(d, d.T)
    assert np.allclose(np.diag(d), 0.0)
    for k in range(n):
        assert np.all(d <= d[:, [k]] + d[[k], :] + 1e-9)
