"""Test suite for rumbounds."""
