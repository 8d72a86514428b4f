"""
Core module for the quantum certification lab.
Contains validated states, Haar sampling and tensor-product operators.
"""
