"""
hotspot_spread.utils
"""
