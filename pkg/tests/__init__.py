"""
Tests for the crane-behavior package.
"""
