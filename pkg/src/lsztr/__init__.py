"""Topological recursion for the quartic complex matrix model with two external fields."""

__version__ = "0.1.0"
