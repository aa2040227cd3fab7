"""Rotation sets of torus homeomorphisms: estimation, rational mode locking, circle dynamics."""
__version__ = "0.1.0"
