"""Invertible flow models, exact likelihoods, gradients, and training."""

from .coupling import CouplingNet, parity_indices
from .glow import CLAMP, AffineCoupling, ActNorm, GlowModel, GlowSpec, LuLinear
from .nice import NiceModel, NiceSpec
from .serialize import flow_from_bytes, flow_to_bytes, load_flow, save_flow
from .training import (
    Adam,
    FlowModel,
    FlowSpec,
    FlowTrainConfig,
    TrainReport,
    apply_flow,
    build_model,
    dataset_nll,
    flow_forward,
    flow_inverse,
    model_checksum,
    nll,
    nll_gradient,
    train_flow,
)

__all__ = [
    "ActNorm",
    "Adam",
    "AffineCoupling",
    "CLAMP",
    "CouplingNet",
    "FlowModel",
    "FlowSpec",
    "FlowTrainConfig",
    "GlowModel",
    "GlowSpec",
    "LuLinear",
    "NiceModel",
    "NiceSpec",
    "TrainReport",
    "apply_flow",
    "build_model",
    "dataset_nll",
    "flow_forward",
    "flow_from_bytes",
    "flow_inverse",
    "flow_to_bytes",
    "load_flow",
    "model_checksum",
    "nll",
    "nll_gradient",
    "parity_indices",
    "save_flow",
    "train_flow",
]
