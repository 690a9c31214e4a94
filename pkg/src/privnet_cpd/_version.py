"""Holds the semver-compliant version string for this package."""
__version__ = "0.1.0"
