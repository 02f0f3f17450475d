"""Pullback measures, change of variables, Jacobians, essential index,
Condition N / N^-1.  Exact on finite spaces: the pullback measure assigns
each source vertex the target mass of its image."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._tol import le
from .certificates import Certificate
from .covering import VertexMap, normal_radius, u_component
from .spaces import ball

__all__ = [
    "PullbackMeasure",
    "JacobianField",
    "pullback_measure",
    "change_of_variables_check",
    "jacobians",
    "area_inequality_check",
    "essential_index",
    "essential_index_profile",
    "condition_N_check",
    "condition_N_inverse_check",
]


def _nu_array(vm: VertexMap, nu: Mapping[str, float] | np.ndarray | None) -> np.ndarray:
    if nu is None:
        return np.asarray(vm.target.mass, dtype=float)
    if isinstance(nu, np.ndarray):
        return nu.astype(float)
    return np.array([float(nu[v]) for v in vm.target.ids], dtype=float)


def _mu_array(vm: VertexMap, mu: Mapping[str, float] | np.ndarray | None) -> np.ndarray:
    if mu is None:
        return np.asarray(vm.source.mass, dtype=float)
    if isinstance(mu, np.ndarray):
        return mu.astype(float)
    return np.array([float(mu[v]) for v in vm.source.ids], dtype=float)


@dataclass(frozen=True)
class PullbackMeasure:
    """f*nu: per-vertex mass nu(f(x)); total = sum_y N(y,f,X) nu(y)."""

    vm: VertexMap
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def of(self, members) -> float:
        idx = [self.vm.source.i(v) if isinstance(v, str) else int(v) for v in members]
        return float(self.values[idx].sum()) if idx else 0.0

    def total(self) -> float:
        return float(self.values.sum())


def pullback_measure(vm: VertexMap, nu: Mapping[str, float] | np.ndarray | None = None) -> PullbackMeasure:
    nu_arr = _nu_array(vm, nu)
    return PullbackMeasure(vm=vm, values=nu_arr[vm.f].copy())


def change_of_variables_check(
    vm: VertexMap,
    rho: Mapping[str, float] | np.ndarray,
    nu: Mapping[str, float] | np.ndarray | None = None,
    rel_tol: float = 1e-12,
) -> Certificate:
    """sum_x rho(x) f*nu(x)  ==  sum_y [sum_{x in f^-1(y)} rho(x)] nu(y)."""
    nu_arr = _nu_array(vm, nu)
    rho_arr = _mu_array(vm, rho)
    lhs = float((rho_arr * nu_arr[vm.f]).sum())
    fiber_sums = np.zeros(vm.target.n)
    np.add.at(fiber_sums, vm.f, rho_arr)
    rhs = float((fiber_sums * nu_arr).sum())
    scale = max(abs(lhs), abs(rhs), 1.0)
    ok = abs(lhs - rhs) <= rel_tol * scale
    return Certificate("change_of_variables", ok, constant=abs(lhs - rhs) / scale,
                       details={"lhs": lhs, "rhs": rhs})


@dataclass(frozen=True)
class JacobianField:
    """J_f = d(f*nu)/d(mu) and its reciprocal, as exact vertex ratios.
    Infinite entries are flagged where the denominator mass vanishes."""

    vm: VertexMap
    jac: np.ndarray
    jac_inv: np.ndarray
    infinite: frozenset[str]
    infinite_inv: frozenset[str]

    def of(self, vid: str) -> float:
        return float(self.jac[self.vm.source.i(vid)])

    def inv_of(self, vid: str) -> float:
        return float(self.jac_inv[self.vm.source.i(vid)])


def jacobians(
    vm: VertexMap,
    mu: Mapping[str, float] | np.ndarray | None = None,
    nu: Mapping[str, float] | np.ndarray | None = None,
) -> JacobianField:
    mu_arr = _mu_array(vm, mu)
    nu_img = _nu_array(vm, nu)[vm.f]
    jac = np.zeros(vm.source.n)
    jac_inv = np.zeros(vm.source.n)
    inf_j: set[str] = set()
    inf_ji: set[str] = set()
    for k in range(vm.source.n):
        m, v = mu_arr[k], nu_img[k]
        if m > 0:
            jac[k] = v / m
        elif v > 0:
            jac[k] = np.inf
            inf_j.add(vm.source.ids[k])
        if v > 0:
            jac_inv[k] = m / v
        elif m > 0:
            jac_inv[k] = np.inf
            inf_ji.add(vm.source.ids[k])
    return JacobianField(vm=vm, jac=jac, jac_inv=jac_inv,
                         infinite=frozenset(inf_j), infinite_inv=frozenset(inf_ji))


def area_inequality_check(
    vm: VertexMap,
    rho: Mapping[str, float] | np.ndarray,
    mu: Mapping[str, float] | np.ndarray | None = None,
    nu: Mapping[str, float] | np.ndarray | None = None,
    rel_tol: float = 1e-12,
) -> Certificate:
    """sum_x rho J_f mu <= sum_y [sum_{x in f^-1(y)} rho(x)] nu(y), with
    equality (for every rho) exactly when Condition N holds."""
    mu_arr = _mu_array(vm, mu)
    nu_arr = _nu_array(vm, nu)
    rho_arr = _mu_array(vm, rho)
    jf = jacobians(vm, mu_arr, nu_arr)
    lhs_terms = np.where(mu_arr > 0, rho_arr * np.where(np.isfinite(jf.jac), jf.jac, 0.0) * mu_arr, 0.0)
    lhs = float(lhs_terms.sum())
    fiber_sums = np.zeros(vm.target.n)
    np.add.at(fiber_sums, vm.f, rho_arr)
    rhs = float((fiber_sums * nu_arr).sum())
    scale = max(abs(lhs), abs(rhs), 1.0)
    holds = lhs <= rhs + rel_tol * scale
    cond_n = condition_N_check(vm, mu_arr, nu_arr)
    equal = abs(lhs - rhs) <= rel_tol * scale
    consistent = equal or not cond_n.passed
    return Certificate(
        "area_inequality", holds and consistent,
        details={"lhs": lhs, "rhs": rhs, "equality": equal,
                 "condition_N": cond_n.passed},
    )


def essential_index(vm: VertexMap, x: int | str, nu=None, r: float | None = None) -> float:
    """f*nu(U(x, f, r)) / nu(B(f(x), r))."""
    xi = vm.source.i(x) if isinstance(x, str) else int(x)
    if r is None or r <= 0:
        raise ValueError("essential_index needs r > 0")
    nu_arr = _nu_array(vm, nu)
    u = sorted(u_component(vm, xi, r).members)
    b = sorted(ball(vm.target, vm.target.ids[int(vm.f[xi])], r))
    denom = float(nu_arr[b].sum())
    num = float(nu_arr[vm.f[u]].sum())
    if denom <= 0:
        return float("inf") if num > 0 else 0.0
    return num / denom


def essential_index_profile(vm: VertexMap, x: int | str, nu=None,
                            cap: float | None = None) -> tuple[float, float, list[tuple[float, float]]]:
    """Max of the essential index over candidate radii not exceeding the cap
    (default: the normal radius at f(x)); returns (value, cap, per-radius)."""
    xi = vm.source.i(x) if isinstance(x, str) else int(x)
    if cap is None:
        cap, _rec = normal_radius(vm, xi)
    radii = [r for r in vm.target.ball_radii(int(vm.f[xi])) if le(r, cap)]
    rows = [(r, essential_index(vm, xi, nu, r)) for r in radii]
    value = max((v for _r, v in rows), default=1.0)
    return value, cap, rows


def condition_N_check(vm: VertexMap, mu=None, nu=None) -> Certificate:
    """Condition N: null sets map to null sets; at vertex level, no mu-null
    vertex may have a nu-positive image (f*nu << mu)."""
    mu_arr = _mu_array(vm, mu)
    nu_img = _nu_array(vm, nu)[vm.f]
    bad = np.nonzero((mu_arr <= 0) & (nu_img > 0))[0]
    witness = vm.source.ids[int(bad[0])] if bad.size else None
    return Certificate("condition_N", bad.size == 0, witness=witness,
                       details={"violations": [vm.source.ids[int(b)] for b in bad]})


def condition_N_inverse_check(vm: VertexMap, mu=None, nu=None) -> Certificate:
    """Condition N^-1: positive sets map to positive sets; no mu-positive
    vertex may map to a nu-null vertex."""
    mu_arr = _mu_array(vm, mu)
    nu_img = _nu_array(vm, nu)[vm.f]
    bad = np.nonzero((mu_arr > 0) & (nu_img <= 0))[0]
    witness = vm.source.ids[int(bad[0])] if bad.size else None
    return Certificate("condition_N_inverse", bad.size == 0, witness=witness,
                       details={"violations": [vm.source.ids[int(b)] for b in bad]})
