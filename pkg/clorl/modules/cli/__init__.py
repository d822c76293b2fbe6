"""
Command-line surface: gen-data, train, sweep, eop, inspect.
"""
