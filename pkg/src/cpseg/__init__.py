"""Change-point localisation for piecewise-constant high-dimensional regression."""
