"""
Schema definitions for the phase-field flow topology optimizer.
"""
