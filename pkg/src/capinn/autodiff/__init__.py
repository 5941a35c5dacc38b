from .jet import MAX_DEGREE, Jet, coef, jet_eval, mixed_partial, nested_seed
from .jet import stack as jet_stack
from .tape import Tape, Var, cos, exp, grad, sin, stack, tanh, value_of

__all__ = [
    "MAX_DEGREE",
    "Jet",
    "Tape",
    "Var",
    "coef",
    "cos",
    "exp",
    "grad",
    "jet_eval",
    "jet_stack",
    "mixed_partial",
    "nested_seed",
    "sin",
    "stack",
    "tanh",
    "value_of",
]
