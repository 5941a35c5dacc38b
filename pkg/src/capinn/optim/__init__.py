"""Base optimizers and the curvature-aware gradient transform."""
from .base import AdamWState, MuonState, SoapState, adamw_step, muon_scale, muon_step, soap_step
from .ca import CaConfig, CaState, ca_transform, curvature_gate
from .optimizer import NAMES, LemmaMonitor, Optimizer, StepInfo, make_optimizer

__all__ = [
    "NAMES",
    "AdamWState",
    "CaConfig",
    "CaState",
    "LemmaMonitor",
    "MuonState",
    "Optimizer",
    "SoapState",
    "StepInfo",
    "adamw_step",
    "ca_transform",
    "curvature_gate",
    "make_optimizer",
    "muon_scale",
    "muon_step",
    "soap_step",
]
