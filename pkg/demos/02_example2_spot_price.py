"""Example 2: a plant with cheap gas and a falling spot price.

At a high spot price both members profit from installing without any
incentive, and the incentive is simply split in half.  As the spot price
falls both unit gains turn negative.  Under the rule that both members must
install, the only community left is the continuum equilibrium at beta_n,
and the installed capacity collapses.
"""
from recgame import example, solve_bargaining

s = example("example2")
print("  x_v   rule     beta*    y_h + y_b    case")
for x in (10.0, 5.5, 5.0, 1.0):
    scen = s.replace(**{"spot_price.initial_value": x})
    for rule in ("both", "biogas"):
        sol = solve_bargaining(scen, participation=rule)
        out = sol.outcome
        print(f"  {x:4.1f}  {rule:7s} {sol.beta_star:7.4f}  {out.y_h + out.y_b:10.4g}    {out.case.value}")
