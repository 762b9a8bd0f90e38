# GenerativeTNC package initialization
"""
Generative tensor network classification: one matrix product state per class,
trained in the many-body feature space and compared by fidelity.
"""

__version__ = "0.1.0"
