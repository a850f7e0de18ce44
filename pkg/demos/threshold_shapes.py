"""Print the conservative threshold across therapeutic thresholds for both relations."""

from conservative_thresholds import Grid, sweep

grid = Grid(100)
mce = sweep(0.2, grid, "mce", 24).rows
ece = sweep(0.2, grid, "ece", 24).rows
print(f"{'jstar':>6} {'mce':>8} {'ece':>8}  branches")
for (js, j_mce, b_mce), (_, j_ece, b_ece) in zip(mce, ece):
    print(f"{js:6.1f} {j_mce:8.2f} {j_ece:8.2f}  {b_mce}/{b_ece}")
