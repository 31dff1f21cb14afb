"""
Multi-depth lensless measurement synthesis
"""
