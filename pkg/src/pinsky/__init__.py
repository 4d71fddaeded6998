"""Open-ended coevolution of dZelda levels and neural policies, with transfer-dynamics analysis."""

__version__ = "0.1.0"
