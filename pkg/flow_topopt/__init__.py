"""
Phase-Field Flow Topology Optimization

A finite-element engine for Stokes-Brinkman topology optimization with
Crouzeix-Raviart velocities, piecewise-constant pressures and a conforming
P1 phase field, driven by a nested augmented-Lagrangian gradient flow over
uniformly refined meshes.
"""

__version__ = "0.1.0"
