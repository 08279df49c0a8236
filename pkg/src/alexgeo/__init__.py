"""Computational toolkit for semiconcave-function machinery on concrete
two-dimensional curvature-bounded spaces."""

__version__ = "0.1.0"
