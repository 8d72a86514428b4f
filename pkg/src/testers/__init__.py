"""
Testers module for the quantum certification lab.
Contains collision statistics, mixedness and closeness tests, certification and the batched BOW tester.
"""
