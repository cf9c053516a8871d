"""Cluster Monte Carlo for lattice spin models, with auxiliary-variable
bond/plaquette samplers and tensor-network cluster proposals."""

__version__ = "0.1.0"

from .lattice import (OPEN, PERIODIC, CouplingField, Lattice, build_lattice,
                      energy, ffi_couplings, local_fields, magnetization,
                      random_spins, sample_disorder)

__all__ = [
    "OPEN", "PERIODIC", "CouplingField", "Lattice", "build_lattice",
    "energy", "ffi_couplings", "local_fields", "magnetization",
    "random_spins", "sample_disorder",
]
