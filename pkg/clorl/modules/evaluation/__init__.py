"""
Policy evaluation, Expected Online Performance and hyperparameter sweeps.
"""
