"""Train the same defense policy at several advice levels and compare.

Runs a small advice-probability sweep (0.0 = pure self-learning, 0.1, 0.2)
on the one-on-one random scenario, evaluates periodic checkpoints, and
prints the resulting success-rate table.  Artifacts (per-episode metrics,
checkpoints, eval report) land in ./artifacts/advice_sweep.

Expected runtime: about ten minutes.  Scale `episodes` / `repetitions`
up for smoother curves.
"""

from pathlib import Path

from swarmguard.harness import (ExperimentConfig, read_eval_report,
                                run_experiment)

out = Path("artifacts/advice_sweep")
cfg = ExperimentConfig(
    name="advice_sweep",
    scenario="random",
    episodes=200,
    repetitions=2,
    n_eval=10,
    advice_probs=[0.0, 0.1, 0.2],
    master_seed=7,
)

manifest = run_experiment(cfg, out)
print(f"experiment complete={manifest['complete']}; artifacts in {out}\n")

print("mean success rate by advice level "
      "(columns: checkpoint episodes, averaged over repetitions):")
for advice in cfg.advice_probs:
    report = read_eval_report(out / f"advice_{advice:g}" / "eval_report.csv")
    cols = report.checkpoint_episodes
    means = report.rates.mean(axis=0).round(2)
    print(f"  advice={advice}: " +
          ", ".join(f"ep{c}={m}" for c, m in zip(cols, means)))
