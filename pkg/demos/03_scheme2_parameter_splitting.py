"""
Concentration with known coefficients
=====================================

One party rotates away the excess |H> weight, then reshapes the time bin with
an unbalanced splitter and polarization-routed delays.
"""

# %%
from hyperconc import StateParams, closed_forms, run_scheme2

params = StateParams.from_squares(alpha2=0.8, delta2=0.6)
rep = run_scheme2(params)
print("success", round(rep.success_probability, 12), "closed form", closed_forms(params).p2)
print(dict(rep.stage_probabilities))

# %%
# The surviving photon on the acting side occupies slots 0 and 2, which act
# as its new S and L.
for r in rep.successful:
    print(r.label, r.target, round(r.fidelity, 12))
    print("   ", r.state.render())

# %%
# Any party can act; four-party GHZ gives the same yield.
print(run_scheme2(params, actor=1).success_probability, run_scheme2(params, n=4).success_probability)

# %%
# Passive 50:50 interferometers instead of routed ones halve the yield.
passive = run_scheme2(params, interferometer="passive")
print(passive.success_probability, passive.notes[0])
