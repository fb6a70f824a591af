"""Exact null controls for conformable-fractional parabolic systems with nonlocal conditions."""
