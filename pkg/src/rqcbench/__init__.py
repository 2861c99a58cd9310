"""Random quantum circuit benchmarking: generation, simulation, cut planning, XEB and cost models."""

__version__ = "0.1.0"
