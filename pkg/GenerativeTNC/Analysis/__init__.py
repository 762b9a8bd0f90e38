# GenerativeTNC analysis package initialization
"""
This package contains the class distance and clustering analysis.
"""
