"""Discrete-event simulator of IR sensing and directional IR links in a microrobot swarm."""

__version__ = "0.1.0"
