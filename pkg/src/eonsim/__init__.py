"""Discrete-event simulator for dynamic provisioning in multi-core elastic optical networks."""

__version__ = "0.1.0"
