"""Monte-Carlo error of the binning scheme as the block length grows.

The budgets keep every rate fixed (R = 1/3, compression rates 2/3) while n
doubles, so the error should fall. Several seeds are shown side by side.
"""
from relaynet import cli
from relaynet.specfile import load_spec

spec = load_spec("bundled:symmetric_two_relay")
rows = cli.simulate_rows(spec, [6, 12], seed=11, trials=200, repeats=5)
print(f"{'repeat':>6s} {'n':>3s} {'k_R':>4s} {'error':>7s}  CI")
for r in rows:
    print(f"{r['repeat']:>6} {r['n']:>3} {r['k_R']:>4} {float(r['error']):7.3f}  "
          f"[{float(r['ci_low']):.3f}, {float(r['ci_high']):.3f}]")
