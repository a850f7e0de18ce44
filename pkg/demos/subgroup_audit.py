"""Audit a synthetic population whose minority group's scores are shifted down."""

from conservative_thresholds import Grid, SyntheticSpec, generate, subgroup_eval
from conservative_thresholds.experiments import default_jstar_grid

grid = Grid(100)
spec = SyntheticSpec(
    n=50_000, risk_law="logit_normal", location=-1.0, scale=1.5,
    corruption="subgroup_shift", shift=-1.0, group_fraction=0.3, seed=0,
)
data = generate(spec, grid)
probe = subgroup_eval(data, grid, 0.1, "ece", default_jstar_grid(100))
alpha = probe.group("shifted").ece
report = subgroup_eval(data, grid, alpha, "ece", default_jstar_grid(100))
print(f"budget set to the shifted group's ECE: {alpha:.4f}")
for row in report.per_group:
    print(f"{row.group:>9}: ece={row.ece:.3f} mce={row.mce:.3f} "
          f"harmful at jstar={len(row.harmful_thresholds_jstar)} at conservative={len(row.harmful_thresholds_jhat)}")
