"""Identity and serial-independence tests driven by universal code lengths."""

__version__ = "0.1.0"
