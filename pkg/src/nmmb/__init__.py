"""Many-body non-Markovianity in a tunnelling double well."""

__version__ = "0.1.0"
