"""
MTF-targeted optimization of radial mask parameters
"""
