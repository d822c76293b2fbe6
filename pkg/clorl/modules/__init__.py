# Modules package
# Submodules are imported directly to avoid circular imports
__all__ = ["actors", "algorithms", "categorical_value", "cli", "data", "envs", "evaluation", "neural"]
