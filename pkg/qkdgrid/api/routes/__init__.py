"""
HTTP routes for qkdgrid
"""
