"""Dialogue-note analytics: issue tagging, latent topics and party
positions in embedding space."""

__version__ = "0.1.0"
