"""Finite metric measure spaces and branched coverings.

Builds a few spaces, looks at balls/components/doubling, then examines the
discrete winding map z -> z^2: its branch set, local indices, and normal
neighborhoods.
"""
import math

from qrgraph import (
    Space,
    ball,
    components,
    diameter,
    doubling_constant,
    gen_polar_grid,
    gen_winding,
    local_index,
    max_multiplicity,
    normal_radius,
    u_component,
)
from qrgraph.covering import branch_set

# a 4-cycle with one long edge
sp = Space.build(
    [("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)],
    [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0), ("d", "a", 3.0)],
    "path",
)
print("distance a-d (through the short side):", sp.d("a", "d"))
print("open ball B(a, 2.1):", sorted(sp.names(ball(sp, "a", 2.1))))
print("components of {a, c}:", [c.ids() for c in components(sp, ["a", "c"])])
print("diameter of the whole space:", diameter(sp, range(sp.n)))
print("doubling constant:", doubling_constant(sp))

# a polar annulus: vertex masses tessellate the region exactly
ann = gen_polar_grid(5, 12, 1.0, math.e)
print("\nannulus total mass:", round(ann.total_mass(), 6),
      "vs pi(e^2-1) =", round(math.pi * (math.e ** 2 - 1), 6))

# the discrete power map z -> z^2 on a disk grid
w2 = gen_winding(2, levels=4, sectors=8)
print("\nwinding map: source", w2.source.n, "vertices ->", w2.target.n)
print("max multiplicity:", max_multiplicity(w2))
print("branch set:", w2.source.names(branch_set(w2)))
center = w2.source.i("center")
print("local index at center:", local_index(w2, center),
      " at a ring vertex:", local_index(w2, "r001s003"))

r, record = normal_radius(w2, "r002s001")
print("normal radius at r002s001:", round(r, 4))
print("properties at that radius:", {k: v for k, v in record.items() if k.startswith("p")})
u = u_component(w2, "r002s001", r)
print("normal neighborhood size:", len(u.members))
