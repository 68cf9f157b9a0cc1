"""Simulation and rigidity analysis of a few-measurement test for n EPR pairs."""

__version__ = "0.1.0"
