"""The incentive value as a function of capacity, checked by simulation.

w(y) is the expected discounted self-consumed energy up to the random end of
the incentive.  It is concave in y and flattens once capacity is well above
demand.  Two Monte Carlo estimators are compared against the closed form.
"""
from recgame import McConfig, coefficients, compute_net_rates, example, w
from recgame.simulation import simulate_w_killed, simulate_w_tau

s = example("example1")
c = coefficients(s, compute_net_rates(s))
print("   y      w(y) [MWh]")
for y in (0.05, 0.1, 0.2, 0.3, 0.52, 0.8):
    print(f"  {y:4.2f}  {w(c, y, 0.0, s.d):10.2f}")

y = (0.32, 0.2)
cfg = McConfig(paths=20_000, seed=1)
closed = w(c, *y, s.d)
for name, fn in (("killed", simulate_w_killed), ("tau", simulate_w_tau)):
    est = fn(s, y, cfg)
    print(f"{name:7s} {est.mean:9.2f} +- {est.standard_error:.2f}   closed form {closed:.2f}"
          f"   z = {est.zscore(closed):.2f}")
