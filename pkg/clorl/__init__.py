"""clorl: offline RL critics trained by classification, on toy tasks with exact oracles."""

__version__ = "0.1.0"
