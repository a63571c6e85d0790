"""Federated online learning to rank with poisoning attacks and unlearning."""

__version__ = "0.1.0"
