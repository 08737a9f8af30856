"""
Application layer: training, evaluation and interpretation services.
"""
