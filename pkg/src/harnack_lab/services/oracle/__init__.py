"""One-dimensional grid oracle."""

from .grid import Grid1D, GridKernel, build_kernel, solve_backward, stationary_measure

__all__ = ['Grid1D', 'GridKernel', 'build_kernel', 'solve_backward', 'stationary_measure']
