"""
API routes package.
""" 