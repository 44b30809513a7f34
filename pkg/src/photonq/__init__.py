"""Exact, differentiable simulation of photons in linear-optical circuits."""

from .circuit import (
    BeamSplitter,
    Fixed,
    InputFeature,
    ParamCircuit,
    PhaseShifter,
    StaticUnitary,
    Trainable,
    add_angle_encoding,
    compile_unitary,
    compile_unitary_derivative,
    sandwich,
    universal_mesh,
    unitary_distance,
)
from .encoding import amplitude_encode, fock_to_qubit, qubit_to_fock
from .errors import PhotonqError
from .fock import AmplitudeVector, FockBasis, FockState, basis_size
from .kernel import FidelityKernel, KernelSpec
from .layer import AmplitudeInput, LayerSpec, QuantumLayer
from .measurement import ComputationSpace, Detector, MeasurementStrategy
from .oracle import haar_unitary, oracle_amplitude, oracle_state, permanent
from .slos import TransitionGraph, build_graph, forward, forward_batch

__version__ = "0.1.0"

__all__ = [
    "AmplitudeInput", "AmplitudeVector", "BeamSplitter", "ComputationSpace", "Detector",
    "FidelityKernel", "Fixed", "FockBasis", "FockState", "InputFeature", "KernelSpec",
    "LayerSpec", "MeasurementStrategy", "ParamCircuit", "PhaseShifter", "PhotonqError",
    "QuantumLayer", "StaticUnitary", "Trainable", "TransitionGraph",
    "add_angle_encoding", "amplitude_encode", "basis_size", "build_graph", "compile_unitary",
    "compile_unitary_derivative", "fock_to_qubit", "forward", "forward_batch", "haar_unitary",
    "oracle_amplitude", "oracle_state", "permanent", "qubit_to_fock", "sandwich",
    "unitary_distance", "universal_mesh",
]
