"""Counterfactual explanations for predictive process monitoring that respect
temporal background knowledge expressed as Declare constraints."""

__version__ = "0.1.0"
