"""
Concentration with unknown coefficients
=======================================

Two identical copies, parity checks on each side, then a single-photon
measurement on the second photons.  Both measurement devices are shown.
"""

# %%
from hyperconc import StateParams, closed_forms, run_scheme1
from hyperconc.protocols import Spm

params = StateParams.from_squares(alpha2=0.8, delta2=0.6)
cf = closed_forms(params)

for spm in (Spm.SIMPLE, Spm.IMPROVED):
    rep = run_scheme1(params, spm)
    print(f"{spm.value:9s} success={rep.success_probability:.6f}  expected={rep.expected:.6f}")
    for stage, p in rep.stage_probabilities:
        print(f"    stage {stage:7s} {p:.6f}")

# %%
# Outcome table of the simple device: only middle-slot clicks succeed.
for r in run_scheme1(params, Spm.SIMPLE).successful:
    print(f"{r.label:16s} -> {r.target}  fidelity={r.fidelity:.12f}")

# %%
# The converter-based device accepts every one of its 16 click patterns.
table = {}
for r in run_scheme1(params, Spm.IMPROVED).successful:
    table.setdefault(r.target, []).append(r.label)
for tid, labels in sorted(table.items()):
    print(tid, labels)

# %%
# The same yield for three parties sharing a GHZ state.
print(run_scheme1(params, Spm.IMPROVED, n=3).success_probability, cf.p1)
