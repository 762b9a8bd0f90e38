# GenerativeTNC CLI package initialization
"""
This package contains the command-line entry point for experiment runs.
"""
