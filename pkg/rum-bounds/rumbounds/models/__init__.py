"""Pydantic models for budget systems, patch representations, results and input files."""
