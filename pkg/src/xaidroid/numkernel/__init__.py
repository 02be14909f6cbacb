"""Small numeric layer shared by the graph attention models.

Float64 throughout. Dense ops and the optimizer live in ops; parameter
containers in params; the per-step hot kernels are provided by a swappable
backend (numpy reference or compiled extension), see backend.
"""

from .backend import backend_name, kernels, set_backend
from .ops import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    adam_update,
    elu,
    grad_check,
    leaky_relu,
    lstm_backward,
    lstm_forward,
    lstm_step,
    softmax,
)
from .params import LstmState, ParamSet, as_tensor

__all__ = [
    "ADAM_BETA1",
    "ADAM_BETA2",
    "ADAM_EPS",
    "LstmState",
    "ParamSet",
    "adam_update",
    "as_tensor",
    "backend_name",
    "elu",
    "grad_check",
    "kernels",
    "leaky_relu",
    "lstm_backward",
    "lstm_forward",
    "lstm_step",
    "set_backend",
    "softmax",
]
