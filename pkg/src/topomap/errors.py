"""Domain errors raised by the topomap engine.

All engine errors derive from TopomapError so the CLI can map them to
exit code 1 while argparse keeps exit code 2 for usage mistakes.
"""


class TopomapError(ValueError):
    """Base class for all domain errors."""


class ManifestError(TopomapError):
    """Activation manifest missing, unreadable or inconsistent."""
