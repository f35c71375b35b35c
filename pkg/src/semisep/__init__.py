"""Determinants of semi-separable integral operators through Volterra sweeps."""
