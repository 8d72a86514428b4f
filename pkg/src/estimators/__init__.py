"""
Estimators module for the quantum certification lab.
Contains POVM samplers, the purification channel and the PTSW estimator.
"""
