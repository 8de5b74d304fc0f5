"""
Core numerics (differentiation tape, network) and dataset dialects.
"""
