"""
Harness module for the quantum certification lab.
Contains experiment configuration, seeding, trial running, calibration and verification.
"""
