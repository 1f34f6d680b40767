"""Experiment configuration, studies, output writers and the command line."""
