from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_map
from qrgraph.covering import local_index
from qrgraph.generators import gen_cycle, gen_cycle_cover, gen_winding, identity_map
from qrgraph.measures import (
    area_inequality_check,
    change_of_variables_check,
    condition_N_check,
    condition_N_inverse_check,
    essential_index,
    essential_index_profile,
    jacobians,
    pullback_measure,
)


class TestPullbackMeasure:
    def test_identity_returns_nu(self):
        vm = identity_map(gen_cycle(6))
        pm = pullback_measure(vm)
        assert np.allclose(pm.values, vm.target.mass)

    def test_double_cover_uniform_total_doubles(self):
        vm = gen_cycle_cover(7, 2)
        pm = pullback_measure(vm)
        assert np.allclose(pm.values, 1.0)
        assert pm.total() == pytest.approx(2.0 * vm.target.total_mass())

    def test_zero_mass_target_pulls_back_zero(self):
        vm = gen_cycle_cover(5, 2)
        nu = {v: (0.0 if v == "t0000" else 1.0) for v in vm.target.ids}
        pm = pullback_measure(vm, nu)
        for x in vm.fiber("t0000"):
            assert pm.values[x] == 0.0

    def test_total_equals_multiplicity_integral(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            vm = random_map(rng, 9, 4)
            pm = pullback_measure(vm)
            total = sum(
                len(vm.fiber(y)) * float(vm.target.mass[y]) for y in range(vm.target.n)
            )
            assert pm.total() == pytest.approx(total, rel=1e-12)

    def test_additive_over_disjoint_sets(self):
        vm = gen_cycle_cover(6, 2)
        pm = pullback_measure(vm)
        a, b = {0, 1, 2}, {5, 6}
        assert pm.of(a | b) == pytest.approx(pm.of(a) + pm.of(b))


class TestChangeOfVariables:
    def test_rho_one_counts_multiplicity(self):
        vm = gen_cycle_cover(6, 2)
        cert = change_of_variables_check(vm, np.ones(vm.source.n))
        assert cert.passed
        assert cert.details["lhs"] == pytest.approx(2.0 * vm.target.total_mass())

    def test_indicator_of_fiber(self):
        vm = gen_cycle_cover(6, 2)
        rho = np.zeros(vm.source.n)
        for x in vm.fiber("t0000"):
            rho[x] = 1.0
        cert = change_of_variables_check(vm, rho)
        assert cert.passed
        assert cert.details["lhs"] == pytest.approx(2.0 * vm.target.mass_of("t0000"))

    def test_500_random_trials(self):
        rng = np.random.default_rng(9)
        for _ in range(500):
            vm = random_map(rng, int(rng.integers(4, 10)), int(rng.integers(2, 5)))
            rho = rng.random(vm.source.n) * 3.0
            nu = rng.random(vm.target.n) + 0.1
            assert change_of_variables_check(vm, rho, nu).passed


class TestJacobians:
    def test_identity_unit(self):
        vm = identity_map(gen_cycle(5))
        jf = jacobians(vm)
        assert np.allclose(jf.jac, 1.0) and np.allclose(jf.jac_inv, 1.0)

    def test_halved_mass_doubles_jacobian(self):
        vm = identity_map(gen_cycle(5))
        mu = np.ones(5)
        mu[2] = 0.5
        jf = jacobians(vm, mu=mu)
        assert jf.jac[2] == pytest.approx(2.0)

    def test_reciprocal_identity_where_positive(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            vm = random_map(rng, 8, 3)
            jf = jacobians(vm)
            for k in range(vm.source.n):
                if np.isfinite(jf.jac[k]) and jf.jac[k] > 0:
                    assert jf.jac[k] * jf.jac_inv[k] == pytest.approx(1.0, abs=1e-12)

    def test_infinity_flag(self):
        vm = identity_map(gen_cycle(4))
        mu = np.ones(4)
        mu[1] = 0.0
        jf = jacobians(vm, mu=mu)
        assert math.isinf(jf.jac[1]) and "c0001" in jf.infinite

    def test_w2_jacobian_profile_monotone_radial(self):
        vm = gen_winding(2, levels=5, sectors=8)
        jf = jacobians(vm)
        per_ring = [jf.of(f"r{i:03d}s000") for i in range(5)]
        assert all(a < b for a, b in zip(per_ring, per_ring[1:]))


class TestAreaInequality:
    def test_equality_with_positive_masses(self):
        vm = gen_cycle_cover(6, 2)
        rng = np.random.default_rng(11)
        cert = area_inequality_check(vm, rng.random(vm.source.n))
        assert cert.passed and cert.details["equality"]

    def test_nu_zero_keeps_equality(self):
        vm = identity_map(gen_cycle(5))
        nu = np.ones(5)
        nu[0] = 0.0
        cert = area_inequality_check(vm, np.ones(5), nu=nu)
        assert cert.passed and cert.details["equality"]

    def test_condition_n_violation_gives_strict_inequality(self):
        vm = identity_map(gen_cycle(5))
        mu = np.ones(5)
        mu[0] = 0.0
        cert = area_inequality_check(vm, np.ones(5), mu=mu)
        assert cert.passed
        assert not cert.details["equality"]
        assert not cert.details["condition_N"]


class TestEssentialIndex:
    def test_identity_is_one_at_all_radii(self):
        vm = identity_map(gen_cycle(8))
        for r in vm.target.ball_radii(0):
            assert essential_index(vm, 0, r=r) == pytest.approx(1.0)

    def test_w2_branch_vertex_between_one_and_two(self):
        vm = gen_winding(2, levels=4, sectors=8)
        ci = vm.source.i("center")
        r = vm.target.ball_radii(int(vm.f[ci]))[0]
        val = essential_index(vm, ci, r=r)
        assert 1.5 < val <= 2.0 + 1e-9

    def test_w2_off_branch_is_one(self):
        vm = gen_winding(2, levels=4, sectors=8)
        x = vm.source.i("r001s002")
        value, _cap, _rows = essential_index_profile(vm, x)
        assert value == pytest.approx(1.0)

    def test_chain_on_corpus(self, corpus_maps):
        for name, vm in corpus_maps.items():
            for x in range(vm.source.n):
                value, _cap, _rows = essential_index_profile(vm, x)
                assert 1.0 - 1e-9 <= value <= local_index(vm, x) + 1e-9, (name, x)


class TestConditions:
    def test_positive_masses_both_pass(self):
        vm = gen_cycle_cover(5, 2)
        assert condition_N_check(vm).passed
        assert condition_N_inverse_check(vm).passed

    def test_nu_null_target_with_positive_fiber_fails_n_inverse(self):
        vm = gen_cycle_cover(5, 2)
        nu = np.ones(vm.target.n)
        nu[0] = 0.0
        cert = condition_N_inverse_check(vm, nu=nu)
        assert not cert.passed and cert.witness in {vm.source.ids[x] for x in vm.fiber(0)}

    def test_mu_null_vertex_over_positive_target_fails_n(self):
        vm = identity_map(gen_cycle(5))
        mu = np.ones(5)
        mu[3] = 0.0
        cert = condition_N_check(vm, mu=mu)
        assert not cert.passed and cert.witness == "c0003"
