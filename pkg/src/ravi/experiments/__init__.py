"""Experiment drivers used by the command line and the demos."""
