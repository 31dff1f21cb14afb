"""
File formats and provenance helpers
"""
