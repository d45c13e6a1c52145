"""
Test package for helfrich-forge.
"""
