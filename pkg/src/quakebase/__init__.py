"""Baseline models for earthquake-prediction skill assessment.

ETAS catalog simulation, a Gutenberg-Richter baseline classifier with
Monte Carlo skill grids, stress-tensor features and single-neuron
aftershock models.
"""

__version__ = "0.1.0"
