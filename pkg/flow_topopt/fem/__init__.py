"""
Finite-element components: meshes and benchmark domains, quadrature,
discrete spaces, assembly, the Stokes-Brinkman solve and the phase-field step.
"""
