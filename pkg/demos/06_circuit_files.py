"""
Circuits as text
================

The shipped protocols also exist as ``.hqc`` files.  Write your own, check
it, and run it.
"""

# %%
from hyperconc.dsl import CircuitError, fixture_path, load, parse, run_circuit, validate

doc = load(fixture_path("scheme2"))
print(run_circuit(doc, {"beta2": 0.3}).success_probability)

# %%
# A minimal circuit: one pair, a waveplate, a measurement.
text = """
param theta = pi / 8
path a b
source ghz a b alpha2=0.5 delta2=0.5
elem waveplate a theta=theta
measure a basis=hv slots=all
"""
rep = run_circuit(parse(text))
for r in rep.result.records:
    print(r.label, round(r.probability, 6))

# %%
# Mistakes are reported with their position.
bad = "path a t r\nelem ubs a -> t r t=0.9 r=0.9\n"
for d in validate(parse(bad)):
    print(d.format(bad, "bad.hqc"))
try:
    parse("path a\nelem pbs_hv a -> a\n")
except CircuitError as exc:
    print(exc.report("arity.hqc"))
