"""Example 1: a biogas plant that sells gas at a high price.

The household's unit gain is positive, so it installs everything it can.
For the plant, every MW of electricity uses gas it could otherwise sell,
so its unit gain is negative and it only installs if it gets enough of the
incentive. Small changes in the gas price around 53.45-53.5 EUR/MWh move
the split and the plant's capacity noticeably.
"""
from recgame import Model, example, solve_bargaining

s = example("example1")
m = Model.build(s)
print(f"unit gains: household {m.gains.g_h:.4e}, biogas {m.gains.g_b:.4e} EUR/MW")

sol = solve_bargaining(m)
print(f"at p = {s.p}: community formed = {sol.community_formed}")

print("\n  gas price   beta*     y_h      y_b")
for p in (53.40, 53.45, 53.50, 53.55):
    sol = solve_bargaining(s.replace(**{"gas_price.initial_value": p}))
    out = sol.outcome
    print(f"  {p:8.2f}  {sol.beta_star:7.4f}  {out.y_h:7.4f}  {out.y_b:7.4f}")
