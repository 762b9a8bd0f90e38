# GenerativeTNC training package initialization
"""
This package contains the sweep trainers for the generative and discriminative models.
"""
