"""calorbits: calibration orbits, deformation complexes and torus deformations."""

__version__ = "0.1.0"
