"""Integrated production, scheduling and routing planner for perishable dairy supply chains."""

__version__ = "0.1.0"
