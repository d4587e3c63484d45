"""
Threshold detectors and the leftover mixture
============================================

Click/no-click detectors cannot tell a genuine coincidence from branches in
which photons bunched, so the accepted output becomes a mixture.
"""

# %%
from hyperconc import DetectorModel, StateParams, closed_forms, run_scheme1

params = StateParams.from_squares(alpha2=0.8, delta2=0.6)
cf = closed_forms(params)

thr = run_scheme1(params, detectors=DetectorModel.THRESHOLD).failure_breakdown
pnr = run_scheme1(params, detectors=DetectorModel.NUMBER_RESOLVING).failure_breakdown

print("               F0        F1        F2")
print(f"threshold  {thr.f0:.6f}  {thr.f1:.6f}  {thr.f2:.6f}")
print(f"formula    {cf.f0:.6f}  {cf.f1:.6f}  {cf.f2:.6f}")
print(f"resolving  {pnr.f0:.6f}  {pnr.f1:.6f}  {pnr.f2:.6f}")

# %%
# Normalized, the threshold mixture is mostly failure.
for kind, w in thr.normalized().items():
    print(f"{kind:20s} {w:.4f}")
