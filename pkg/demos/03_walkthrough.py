"""Region-by-region bounds for the argmin field of the gap on the genus-2 example.

Run:  python demos/03_walkthrough.py
"""
from hourglass.analytic import genus2_walkthrough, walkthrough_case

for S, s, L in ((1, 0.01, 2), (1, 0.05, 20)):
    print(f"(S, s, L) = ({S}, {s}, {L}) -> case {walkthrough_case(S, s, L)}")

rep = genus2_walkthrough(1, 0.01, 2)
print(rep.table())
print("region areas:", {k: round(v, 6) for k, v in rep.areas.items()})
print("int_A g |q| residual: %.2e" % rep.integral_A_residual)
