"""Constrained goal model reasoning toolkit.

Model goals, refinements and domain assumptions with Boolean and
linear-rational constraints, encode them to SMT(LRA)/OMT(LRA), and
find/enumerate/optimize realizations with the built-in lazy-SMT solver.
"""

from importlib import resources

from .model import CGM, Classification, InvalidModel, build_model, classify

__version__ = "0.1.0"


def load_fixture() -> CGM:
    """The bundled meeting-scheduler example model."""
    from .dsl import parse_model

    text = resources.files("cgmkit.data").joinpath("meeting_scheduler.cgm").read_text()
    return parse_model(text, "meeting_scheduler.cgm")


def fixture_text() -> str:
    return resources.files("cgmkit.data").joinpath("meeting_scheduler.cgm").read_text()


__all__ = [
    "CGM",
    "Classification",
    "InvalidModel",
    "build_model",
    "classify",
    "load_fixture",
    "fixture_text",
    "__version__",
]
