"""Exact-arithmetic tools for building and certifying quasimorphisms from group actions."""

from .qmcore import Quasimorphism, defect_search, homogenize
from .words import PSL2Z, Presentation, Word, parse_word

__version__ = "0.1.0"

__all__ = ["PSL2Z", "Presentation", "Quasimorphism", "Word", "defect_search", "homogenize", "parse_word"]
