"""
Helfrich Forge - explicit sphere-catenoid surfaces and their curvature energies.
"""

__version__ = '0.1.0'
