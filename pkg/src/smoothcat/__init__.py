"""Finite models of generalised smooth spaces: structures on finite carriers
tested against a finite concrete site, with forcing conditions, lattices of
structures, and the functors between them."""

from smoothcat.fincat import FinCategory, FinSet, FinTop, Site, SmoothcatError, CapExceeded
from smoothcat.spaces import VObject, SmoothConfig, embed_test, fibre_enumerate, order_leq
from smoothcat.forcing import ForcingSpec, parse_spec, satisfies_forcing
from smoothcat.fixtures import fixture

__all__ = [
    "CapExceeded",
    "FinCategory",
    "FinSet",
    "FinTop",
    "ForcingSpec",
    "Site",
    "SmoothConfig",
    "SmoothcatError",
    "VObject",
    "embed_test",
    "fibre_enumerate",
    "fixture",
    "order_leq",
    "parse_spec",
    "satisfies_forcing",
]
