# GenerativeTNC classifiers package initialization
"""
This package contains the classification rules built on trained models.
"""
