"""Shipped rule set and default-value list."""
