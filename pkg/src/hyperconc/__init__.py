"""Exact linear-optics simulation of polarization/time-bin hyperentanglement concentration."""

from .analysis import closed_forms, fidelity, schmidt_per_dof
from .fock import H, V, Mode, PhotonicState, Polarization, StateParams, apply, build_ghz, build_hyper_pair, normalize, target_state, tensor
from .measurement import Basis, DetectionSpec, DetectorModel, Monitor, enumerate_outcomes
from .protocols import ProtocolId, ProtocolReport, Spm, run_scheme1, run_scheme2, sweep, threshold_mixture

__version__ = "0.1.0"
