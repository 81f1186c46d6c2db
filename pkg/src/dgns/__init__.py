"""Interior-penalty discontinuous Galerkin solver for 2D incompressible flow."""

__version__ = "0.1.0"
