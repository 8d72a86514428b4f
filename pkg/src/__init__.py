"""
qcertlab

Desk-scale simulation and verification lab for quantum state certification,
mixedness testing and purity estimation with t-copy measurements.
"""

__version__ = "1.0.0"
