"""
cardkit core: conflict-aware replicated data types
"""
