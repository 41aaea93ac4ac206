"""Formula layer: ASTs, concrete syntax, and specification generators."""

from . import ast
from .parser import ParseError, parse, parse_formula, parse_temporal
from .printer import pretty, pretty_temporal

__all__ = [
    "ast",
    "ParseError",
    "parse",
    "parse_formula",
    "parse_temporal",
    "pretty",
    "pretty_temporal",
]
