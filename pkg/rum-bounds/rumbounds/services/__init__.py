"""Geometry, type enumeration, linear programming and bound services."""
