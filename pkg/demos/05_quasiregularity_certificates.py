"""Quasiregularity certificates: dilatations, BLD/BDD/LQ, K_O/K_I, Väisälä.

The identity gives every constant exactly 1; the conformal winding's
modulus certificates converge to their conformal limits; the double cover
realizes the Väisälä equality Mod(Gamma') = Mod(Gamma)/2.
"""
from qrgraph import (
    CurveFamily,
    analytic_qr_constant,
    bld_verify,
    bdd_verify,
    bqs_gauge,
    dilatation_profile,
    gen_cycle_cover,
    gen_winding,
    ki_certificate,
    ko_certificate,
    lq_verify,
    vaisala_certificate,
)
from qrgraph.dilatation import lipschitz_field
from qrgraph.generators import gen_cycle, identity_map
from qrgraph.spaces import Curve

ident = identity_map(gen_cycle(8))
fam = CurveFamily.connecting(ident.source, ["c0000"], ["c0004"])
print("identity: K_O =", ko_certificate(ident, [fam]).constant,
      " K_I =", ki_certificate(ident, [fam]).constant)

cover = gen_cycle_cover(8, 2)
print("\ndouble cover: BLD", bld_verify(cover).constant,
      " BDD", bdd_verify(cover).constant,
      " LQ", lq_verify(cover).constant)
print("lipschitz field at s0000:", lipschitz_field(cover)["s0000"])

w2 = gen_winding(2, levels=5, sectors=12)
prof = dilatation_profile(w2, w2.source.i("center"))
print("\nwinding H at the branch (radial symmetry):", prof.h_sup)
qr = analytic_qr_constant(w2, q=2.0)
print("analytic constant away from the branch:",
      round(qr.details["max_away_from_excluded"], 4))

gauge = bqs_gauge(cover, seed=0, budget=20)
print("\nBQS gauge head (t, eta(t)):",
      [(round(t, 3), round(v, 3)) for t, v in gauge.pairs()[:5]])

# Väisälä equality on the symmetric double cover
n = 8
src, tgt = cover.source, cover.target
loop = [f"t{i % n:04d}" for i in range(n + 1)]
gamma_prime = [Curve.from_ids(tgt, loop)]
gamma = [Curve.from_ids(src, [f"s{i % (2 * n):04d}" for i in range(n + 1)]),
         Curve.from_ids(src, [f"s{(i + n) % (2 * n):04d}" for i in range(n + 1)])]
cert = vaisala_certificate(cover, gamma, gamma_prime, [[0, 1]], m=2, q=2.0, k_bound=1.0)
print("\nVäisälä: Mod(Gamma') =", cert.details["mod_gamma_prime"],
      " Mod(Gamma)/2 =", cert.details["mod_gamma"] / 2)
