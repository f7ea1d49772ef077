"""relfluid: analysis toolkit for relativistic perfect and viscous fluids."""

__version__ = "0.1.0"
