"""
Shared infrastructure for cardkit: settings and logging
"""
