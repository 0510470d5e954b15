"""Compiled flows and propagation of KvN wavefunctions."""
