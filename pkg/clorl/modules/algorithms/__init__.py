"""
Offline actor-critic algorithms (ReBRAC, IQL, LB-SAC) with interchangeable
scalar (MSE) and categorical (cross-entropy) critic heads.

Submodules are imported directly, e.g. ``from clorl.modules.algorithms.usecase import train``.
"""
