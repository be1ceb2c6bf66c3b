"""Threshold-based adjustment on a two-state Gaussian chain, replicated.

Every replicate draws a fresh sequence, then both adjustment procedures
run at several thresholds in both replacement modes.  The iterative
procedure reaches a better error rate with far fewer replacements and
keeps all conditional classification probabilities above the threshold.

This demo uses a reduced setting for speed; the full study
(100 replicates, n = 1000) is

    hmmseg simulate gaussian --seed 20260811 --replicates 100 --n 1000 \
        --deltas 0.2,0.25,0.3 --out-dir gaussian_out
"""

from pathlib import Path

from hmmseg.experiments import run_gaussian_experiment

out_dir = Path(__file__).parent / "output"
study = run_gaussian_experiment(
    replicates=15, n=600, deltas=(0.2, 0.25, 0.3), seed=11, out_dir=out_dir
)

print("baseline alignments (means over replicates):")
for row in study.baseline:
    print(
        f"  {row['alignment']:8s} errors {row['mean_errors']:6.1f}  "
        f"E(errors) {row['mean_expected_errors']:6.1f}  "
        f"min rho {row['mean_rho_min']:.3f}  log posterior {row['mean_log_posterior']:.1f}"
    )

header = (
    "  delta  algorithm  mode  adjustments      errors   E(errors)"
    "   min rho (uncond/cond)   log posterior"
)
print("\nadjusted alignments:" + "\n" + header)
for row in study.summary:
    print(
        f"  {row['delta']:.2f}   {row['algorithm']:9s}  {row['mode']:4s} "
        f"{row['mean_adjustments']:6.1f} ({row['sd_adjustments']:4.1f}) "
        f"{row['mean_errors']:9.1f} {row['mean_expected_errors']:10.1f}"
        f"      {row['mean_rho_min_uncond']:.3f} / {row['mean_rho_min_cond']:.3f}"
        f"        {row['mean_log_posterior']:8.1f}"
    )

print(
    "\nnote how the iterative rows use roughly a third of the adjustments,"
    "\nreach fewer errors, and keep the minimum probability above the threshold."
)
print(f"\nCSV tables written to {out_dir}/")
