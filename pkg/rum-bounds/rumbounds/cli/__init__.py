"""Command handlers and output rendering for the rumbounds command line."""
