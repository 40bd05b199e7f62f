"""Density-matrix evolution engine."""

from groverdd.qsim.backend import BACKEND
from groverdd.qsim.state import (
    MAX_QUBITS,
    DensityMatrix,
    KrausChannel,
    MeasurementDistribution,
    apply_channel,
    apply_unitary,
    bitstring_index,
    index_bitstring,
    init_state,
    kraus_superop,
    measure_distribution,
    sample_counts,
    unitary_superop,
)

__all__ = [
    "BACKEND",
    "MAX_QUBITS",
    "DensityMatrix",
    "KrausChannel",
    "MeasurementDistribution",
    "apply_channel",
    "apply_unitary",
    "bitstring_index",
    "index_bitstring",
    "init_state",
    "kraus_superop",
    "measure_distribution",
    "sample_counts",
    "unitary_superop",
]
