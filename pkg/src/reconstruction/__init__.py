"""
ADMM total-variation reconstruction and digital refocusing
"""
