"""Subclass distillation on the synthetic benchmark.

Two classes; the positive one has two subclasses that share a shortcut
feature. At test time half of the positive samples lose the shortcut, so a
student only does well if it also learned the secondary features that tell
the subclasses apart. Takes about half a minute.

Run: python3 demos/skd_simulation.py [runs]
"""
import sys

from subclass_kd.distill.experiment import ARMS, run_experiment
from subclass_kd.distill.training import DistillConfig
from subclass_kd.synthdata import benchmark_spec, degenerate_spec

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 20
cfg = DistillConfig(runs=runs)

for label, spec in (("benchmark", benchmark_spec()), ("merged subclasses", degenerate_spec())):
    report = run_experiment(spec, cfg)
    print(f"\n{label}: mean test F1 over {runs} runs")
    for arm in ARMS:
        s = report["f1"][arm]
        print(f"  {arm:<14} {s['mean']:.4f} +- {s['se']:.4f}")
    c = report["comparisons"]["skd_vs_kd"]
    z = "n/a" if c["z"] is None else f"{c['z']:.2f}"
    print(f"  SKD - KD = {c['gap']:+.4f} (z = {z})")
    lb = report["labelbits"]
    print(f"  teacher label bits: {lb['with_subclasses']['total_bits']:.4f} with subclasses, "
          f"{lb['class_only']['total_bits']:.4f} class only")
