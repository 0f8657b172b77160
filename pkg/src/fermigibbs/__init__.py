"""Dense numerical laboratory for a detailed-balanced fermionic Lindbladian and its parent Hamiltonian."""

__version__ = "0.1.0"
