# GenerativeTNC tensor kernel package initialization
"""
This package contains the dense tensor primitives the models are built on.
"""
