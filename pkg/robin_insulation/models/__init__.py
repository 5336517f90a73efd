"""Data models for the insulation laboratory."""
