"""
Yield over the special family |alpha| = |delta|, |beta| = |eta|
==============================================================

The known-coefficient scheme beats the unknown-coefficient one by the factor
1 / (1 - |beta|^2).  Rows go to a CSV for plotting elsewhere.
"""

# %%
import io

from hyperconc.protocols import special_grid, sweep, write_sweep_csv

rows = sweep(["scheme1-improved", "scheme2"], special_grid(11))
buf = io.StringIO()
write_sweep_csv(rows, buf, layout="wide")
print(buf.getvalue())

# %%
# Same table from the command line:
#   hyperconc sweep --special --steps 51 --layout wide --out fig.csv
for line in buf.getvalue().splitlines()[2:]:
    b2, p1, _, p2, _ = map(float, line.split(","))
    print(f"beta2={b2:.2f}  P2/P1={p2 / p1:.6f}  1/(1-beta2)={1 / (1 - b2):.6f}")
