"""Industry trade networks and firm export entry: theory, simulation, estimation."""

__version__ = "0.1.0"
