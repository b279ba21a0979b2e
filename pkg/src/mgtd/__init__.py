"""mgtd: stylometric profiling and machine-generated-text detection toolkit."""

__version__ = "0.1.0"

LABEL_HUMAN = 0
LABEL_MACHINE = 1
