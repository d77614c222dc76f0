"""Recursive auxiliary-variable inference: strategies, estimators and oracles."""
