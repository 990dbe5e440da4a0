"""A network where the closed-form test and the stepwise system disagree.

The closed-form constraints all hold, yet eliminating the binning rates from
the stepwise system leaves a constant row with a negative bound. An LP on the
same system (if scipy is installed) agrees that it is empty.
"""
from pathlib import Path

from relaynet import fme, region
from relaynet.specfile import load_spec

path = Path(__file__).resolve().parents[1] / "tests" / "data" / "closed_form_gap.json"
dist = load_spec(path).dist

verdict = region.theorem1_verdict(dist)
print(f"closed form: feasible={verdict.feasible}, min slack {verdict.min_slack:.6f}")
check = fme.check_against_theorem1(dist)
print(check.describe())

try:
    from scipy.optimize import linprog
except ImportError:
    raise SystemExit(0)

system = region.stepwise_system(dist)
names = list(system.variables)
A = [[float(r.coeffs.get(v, 0)) for v in names] for r in system.rows]
b = [float(r.bound) for r in system.rows]
res = linprog([0.0] * len(names), A_ub=A, b_ub=b, bounds=[(None, None)] * len(names),
              method="highs")
print(f"LP on the stepwise system: status {res.status} ({res.message})")
