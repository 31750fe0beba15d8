"""Pytest configuration file to automatically load fixtures."""
pytest_plugins = ["tests.fixtures"]