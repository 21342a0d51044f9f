"""Backpropagated gradients against central differences.

The finite differences are evaluated in extended precision, so the
comparison is limited by the step size rather than by float64 rounding.

Run: python3 demos/gradient_check.py
"""
from subclass_kd.distill.training import gradient_check_sweep

paths = {
    "cross-entropy only": (1.0, 1.0),
    "distillation only, tau 1": (1.0, 0.0),
    "distillation only, tau 5": (5.0, 0.0),
    "mixed, tau 5, lambda 0.45": (5.0, 0.45),
}
# With the coarse step a perturbation can cross a ReLU kink, where the
# difference quotient no longer approximates the derivative.
for eps in (1e-6, 1e-3):
    print(f"eps = {eps:g}")
    for name, (err, worst) in gradient_check_sweep(100, eps=eps, paths=paths).items():
        print(f"  {name:<28} max relative error {err:.2e} (case {worst})")
