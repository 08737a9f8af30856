"""
Infrastructure: file formats and artifact persistence.
"""
