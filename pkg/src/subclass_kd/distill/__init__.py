"""Toy teacher/student networks trained with cross-entropy and subclass
distillation losses."""
from .experiment import run_experiment
from .losses import aggregate_to_class, kl_divergence, skd_loss, softmax_with_temperature, student_objective
from .metrics import Metrics, evaluate
from .network import ToyNet
from .training import ConfigError, DistillConfig, distill_student, gradient_check, train_supervised, train_teacher
