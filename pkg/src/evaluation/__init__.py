"""
Image-quality metrics for comparing reconstructions against ground truth
"""
