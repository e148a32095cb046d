"""Fibonacci cube random generation for finite black box groups."""
__version__ = "0.1.0"
