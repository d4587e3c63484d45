"""
States and optical elements
===========================

A hyperentangled pair, a few elements, and the bosonic bookkeeping behind
them.
"""

# %%
# A pair in polarization (H/V) and time bin (slots 0 = S, 1 = L).
import math

from hyperconc import H, V, Mode, PhotonicState, StateParams, apply, build_hyper_pair
from hyperconc import elements as el

params = StateParams.from_squares(alpha2=0.8, delta2=0.6)
pair = build_hyper_pair(params, "a", "b")
print(pair.render())

# %%
# A polarizing beam splitter sends H straight through and reflects V.
pbs = el.pbs_hv("a", "b", "o1", "o2")
print(apply(PhotonicState.basis(Mode("a", V, 0)), pbs).render())

# %%
# Two H photons meeting on a 50:50 splitter leave together (Hong-Ou-Mandel).
hom = apply(PhotonicState.basis(Mode("u", H, 0), Mode("d", H, 0)), el.bs50("u", "d", "u", "d"))
print(hom.render())

# %%
# The time-bin converter maps polarization-time to path-polarization.
conv = el.tb_converter("x", "x_up", "x_down")
for pol in (H, V):
    for slot in (0, 1):
        print(f"{pol.value}{slot} ->", [(m.label(), c) for m, c in conv.image(Mode("x", pol, slot))])

# %%
# The plain unbalanced interferometer is not unitary on its own: the
# dropped output ports carry the missing norm.
ui = el.plain_ui("a")
out = apply(PhotonicState.basis(Mode("a", H, 0)), ui)
print(out.render(), " norm^2 =", round(out.norm() ** 2, 12))
print("isometric:", ui.isometric, " 1/sqrt2 =", 1 / math.sqrt(2))
