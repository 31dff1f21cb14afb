"""
Geometric PSF simulation and modulation transfer functions
"""
