"""
Services package.
""" 