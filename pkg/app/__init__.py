"""MorphoPOET - morphology/controller co-optimisation workbench."""

__version__ = "0.1.0"
