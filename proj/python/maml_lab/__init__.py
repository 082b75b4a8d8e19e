"""Multi-step MAML toolkit: synthetic task families with exact smoothness
constants, exact meta-gradients, convergence-bound constants, trainers, and
Monte-Carlo bound verification. Thin wrapper over the C++ core."""

from maml_lab._core import (
    TaskDistribution,
    constants,
    default_alpha,
    exact_meta_grad,
    exact_task_meta_grad,
    family_from_json,
    inner_gd_path,
    inner_stepsize_bound,
    make_finite_sum_mse,
    make_quadratic_family,
    make_trig_family,
    meta_loss,
    run,
    stoch_meta_grad,
    verify,
)

__all__ = [
    "TaskDistribution",
    "constants",
    "default_alpha",
    "exact_meta_grad",
    "exact_task_meta_grad",
    "family_from_json",
    "inner_gd_path",
    "inner_stepsize_bound",
    "make_finite_sum_mse",
    "make_quadratic_family",
    "make_trig_family",
    "meta_loss",
    "run",
    "stoch_meta_grad",
    "verify",
]
