"""
Chi-square lab for the quantum certification lab.
Contains hard instances, Lueders and induced channels and exact divergence computations.
"""
