"""fdmflow: block-diagram refinement toolchain with multi-level simulation."""

__version__ = "0.1.0"
