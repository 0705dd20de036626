"""
Acceptance runs for the decoders: scenario runner and scoring checks.
"""
