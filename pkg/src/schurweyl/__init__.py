"""
Schur-Weyl module for the quantum certification lab.
Contains partitions, characters, isotypic projectors and the Haar moment oracle.
"""
