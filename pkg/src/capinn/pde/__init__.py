from .derivatives import collect
from .loss import pinn_loss, pinn_loss_fn, predict
from .metrics import linf, relative_l2
from .problems import (
    BelousovZhabotinsky,
    Burgers,
    GrayScott,
    Heat,
    KuramotoSivashinsky2D,
    PdeProblem,
    make_problem,
)
from .sampling import SamplePlan, Samples, sample_domain, write_points_csv

__all__ = [
    "BelousovZhabotinsky",
    "Burgers",
    "GrayScott",
    "Heat",
    "KuramotoSivashinsky2D",
    "PdeProblem",
    "SamplePlan",
    "Samples",
    "collect",
    "linf",
    "make_problem",
    "pinn_loss",
    "pinn_loss_fn",
    "predict",
    "relative_l2",
    "sample_domain",
    "write_points_csv",
]
