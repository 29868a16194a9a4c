"""Vector-beam generation by four-wave mixing in a phonon-coupled quantum-dot medium."""

__version__ = "0.1.0"
