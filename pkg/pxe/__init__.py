"""pxe - spectral solver and regularity toolkit for the paraxial depth-evolution problem"""

__version__ = "0.4.0"
__author__ = "pxe developers"
__description__ = "Frozen-coefficient evolution systems for rough lateral media"

# Don't import modules here to avoid circular imports when running as __main__
__all__ = ["__version__", "__author__", "__description__"]
