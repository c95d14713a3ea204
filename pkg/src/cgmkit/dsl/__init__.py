"""Textual modelling language and canonical JSON serialization."""

from .parser import ParseError, parse, parse_model
from .printer import print_model
from .jsonio import (
    JsonSchemaError,
    model_from_json,
    model_to_json,
    model_to_json_text,
    outcome_to_json,
    rational_from_text,
    rational_to_text,
    realization_from_json,
    realization_to_json,
)

__all__ = [
    "ParseError",
    "parse",
    "parse_model",
    "print_model",
    "JsonSchemaError",
    "model_from_json",
    "model_to_json",
    "model_to_json_text",
    "outcome_to_json",
    "rational_from_text",
    "rational_to_text",
    "realization_from_json",
    "realization_to_json",
]
