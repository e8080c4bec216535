"""Run a small Monte-Carlo sweep through the experiment harness.

The harness sweeps grid sizes, radii, sampling rates, and score shapes,
runs seeded trials at each point, and writes records.csv, summary.csv, and
config.json to an output directory. Seeding is per trial, so results are
bit-identical whether trials run sequentially or across workers (set the
BTLRANK_WORKERS environment variable to parallelize). Here a shrunk
estimator comparison runs in a few seconds and the summary is printed.
"""

import tempfile

from btlrank import default_config, run_experiment

config = default_config(
    "mle-vs-dcoverlap",
    n_list=(128,), r_list=(16,), p_list=(0.5,), L_list=(10, 30, 100),
    trials=8, base_seed=3,
    out_dir=tempfile.mkdtemp(prefix="btlrank_demo_"))

records, summary = run_experiment(config)
print(f"ran {len(records)} trials, files in {config.out_dir}\n")

cols = ("method", "L", "mean_linf", "median_linf", "theory_bound")
print(" ".join(f"{c:>13}" for c in cols))
for row in sorted(summary, key=lambda row: (row["L"], row["method"])):
    vals = []
    for c in cols:
        v = row.get(c, "")
        vals.append(f"{v:>13.4f}" if isinstance(v, float) else f"{v!s:>13}")
    print(" ".join(vals))

print("\nboth estimators improve like 1/sqrt(L) and sit below the "
      "closed-form locality rate on average.")
