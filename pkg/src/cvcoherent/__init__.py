"""Continuous-variable coherent communication with linear optics.

Two engines evaluate every circuit: a symbolic Heisenberg-picture engine
(:mod:`cvcoherent.quad_algebra`) and a Gaussian covariance-matrix oracle
(:mod:`cvcoherent.gaussian_oracle`).
"""

from .analysis import (
    ChannelReport,
    EntanglementReport,
    FidelityReport,
    duan_check,
    epsilon_threshold_class,
    sweep,
    teleport_fidelity,
    verify_coherent_channel,
)
from .fma_qnd import UNITY_GAIN_T, FmaParams, eta_F
from .protocols import (
    PROTOCOLS,
    Fma,
    Ideal,
    ScenarioResult,
    ccaecc,
    coherent_superdense,
    coherent_teleportation,
    incoherent_reduction_check,
    qnd_coherent_channel,
)
from .quad_algebra import P, X, QuadExpr, SourceKind, SourceRegistry

__version__ = "0.1.0"

__all__ = [
    "ChannelReport",
    "EntanglementReport",
    "FidelityReport",
    "Fma",
    "FmaParams",
    "Ideal",
    "P",
    "PROTOCOLS",
    "QuadExpr",
    "ScenarioResult",
    "SourceKind",
    "SourceRegistry",
    "UNITY_GAIN_T",
    "X",
    "ccaecc",
    "coherent_superdense",
    "coherent_teleportation",
    "duan_check",
    "epsilon_threshold_class",
    "eta_F",
    "incoherent_reduction_check",
    "qnd_coherent_channel",
    "sweep",
    "teleport_fidelity",
    "verify_coherent_channel",
]
