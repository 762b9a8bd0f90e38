# GenerativeTNC data package initialization
"""
This package contains dataset loading and preprocessing for the GenerativeTNC project.
"""
