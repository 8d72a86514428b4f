"""
__init__.py

Test package for the quantum certification lab.
"""
