"""How strong would an omitted confounder need to be to kill a result?

The robustness value is the partial R-squared a confounder would need
with both the instrument and the outcome to drive the estimate to zero;
observed covariates give a sense of scale for what "strong" means.
"""

import numpy as np

from careerlink import adjusted_estimate, analyze_reduced_form, robustness_value

rng = np.random.default_rng(3)
n = 5_000
controls = rng.standard_normal((n, 3))
z = 0.05 * controls[:, 0] + rng.standard_normal(n)
y = 0.8 * z + 0.05 * controls[:, 1] + rng.standard_normal(n)

report = analyze_reduced_form(
    y, z, controls, "no_reception",
    benchmark_columns={"female": 0, "academic": 1},
)

print(f"robustness value: {100 * report.robustness_value:.1f}% "
      f"(t = {report.t_stat:.1f}, dof = {report.dof})")
for label, r2_zw, r2_yw in report.benchmarks:
    print(f"  benchmark {label:8}  R2 with z: {100 * r2_zw:.2f}%"
          f"   R2 with y: {100 * r2_yw:.2f}%")
# Observed covariates explain far less than the robustness value, so a
# confounder strong enough to overturn the result would have to dwarf
# anything in the data.

# The algebra closes on itself: a confounder of exactly RV strength on
# both margins moves the estimate exactly to zero.
rv = robustness_value(report.t_stat, report.dof)
beta = 0.8
se = beta / report.t_stat
print(f"\nadjusted estimate at (RV, RV): "
      f"{adjusted_estimate(beta, se, report.dof, rv, rv):.2e}")
