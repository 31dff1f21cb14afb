"""
Coded mask construction: radial parameterization, star-chart, FZA and random baselines
"""
