# GenerativeTNC models package initialization
"""
This package contains the tensor network models: feature map, MPS, labeled
MPS and their file format.
"""
