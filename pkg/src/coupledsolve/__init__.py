"""Exact solver for coupled linear ODE systems with nested-sum series coefficients."""
