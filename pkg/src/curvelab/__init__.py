"""Numerical moving frames for minimal surfaces in spheres."""
