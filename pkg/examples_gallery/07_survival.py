"""Kaplan-Meier survival of inventor careers.

Each career contributes its active span in years; careers still filing
near the end of the observation window are censored because their true
exit is unobserved.
"""

from careerlink import kaplan_meier

# (duration in years, censored?) - censored careers were still active.
observations = [
    (2, False), (3, False), (3, False), (4, False), (5, False),
    (5, True), (6, False), (7, True), (8, True), (9, True),
]

curve = kaplan_meier(observations)

print("t   at-risk  events  S(t)")
for t, s, r, d in zip(curve.times, curve.survival, curve.at_risk, curve.events):
    print(f"{int(t):<3} {int(r):>7} {int(d):>7}  {s:.3f}")

print(f"\nmedian survival reached: {'yes' if curve.survival[-1] < 0.5 else 'no'}")
print(f"S(4) = {curve.evaluate(4):.3f}   S(8) = {curve.evaluate(8):.3f}")
# Censored careers stay in the risk set until their censoring time, so the
# curve falls more slowly than a naive empirical distribution of exits.
