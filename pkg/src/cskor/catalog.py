"""Closed forms for the builtin laws: maps on the disk and lower boundary curves.

These are reference values only. The numerical pipeline never reads them;
tests and reports compare against them.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import Arcsine, Atomic, Cauchy, Distribution, HypSecant, Uniform

__all__ = ["CURVES", "catalog_name", "closed_form_map", "closed_form_curve", "strip_map"]

CURVES = (
    "uniform_catenary",
    "arcsine_lower",
    "hypsech_parabola",
    "cauchy_halfplane",
    "arcsine_gross_disc",
)


def _half_width(d: Distribution) -> float:
    return 0.5 * (d.beta - d.alpha)


def catalog_name(d: Distribution, variant: str = "delta_infinity") -> str | None:
    """Catalog tag of a centered builtin law under a construction variant."""
    if isinstance(d, Cauchy):
        return "cauchy_halfplane" if variant == "formal_cauchy" and d.loc == 0 else None
    if not d.is_centered:
        return None
    if variant == "delta_infinity":
        if isinstance(d, Uniform):
            return "uniform_catenary"
        if isinstance(d, Arcsine):
            return "arcsine_lower"
        if isinstance(d, HypSecant):
            return "hypsech_parabola"
    elif variant == "gross" and isinstance(d, Arcsine):
        return "arcsine_gross_disc"
    return None


def _log_ratio(z):
    w = np.sqrt(z)
    return w, np.log((1.0 + w) / (1.0 - w))


def closed_form_map(name: str, d: Distribution):
    """Callable ``z -> f(z)`` for a catalog entry, scaled to ``d``."""
    if name == "uniform_catenary":
        h = _half_width(d)
        return lambda z: -(2j * h / math.pi) * np.log(1.0 - np.asarray(z, dtype=complex))
    if name == "arcsine_lower":
        h = _half_width(d)

        def f(z):
            z = np.asarray(z, dtype=complex)
            out = np.zeros_like(z)
            nz = z != 0
            w, L = _log_ratio(z[nz])
            # even in sqrt(z), so the branch of the root does not matter
            out[nz] = (1j * h / math.pi) * (L * (w + 1.0 / w) - 2.0)
            return out

        return f
    if name == "hypsech_parabola":
        s = d.scale

        def f(z):
            z = np.asarray(z, dtype=complex)
            _, L = _log_ratio(z)
            return (2j * s / math.pi**2) * L**2

        return f
    if name == "cauchy_halfplane":
        s = d.scale
        return lambda z: 2j * s * np.asarray(z, dtype=complex) / (1.0 - np.asarray(z, dtype=complex))
    if name == "arcsine_gross_disc":
        h = _half_width(d)
        return lambda z: -h * np.asarray(z, dtype=complex)
    raise KeyError(name)


def strip_map(h: float = 1.0):
    """Map of the disk onto the vertical strip ``|Re w| < h``."""
    return lambda z: (2j * h / math.pi) * np.log(
        (1.0 + np.asarray(z, dtype=complex)) / (1.0 - np.asarray(z, dtype=complex))
    )


def closed_form_curve(name: str, d: Distribution):
    """Callable ``x -> gamma(x)`` (lower boundary) for a catalog entry."""
    if name == "uniform_catenary":
        h = _half_width(d)
        return lambda x: -(2.0 * h / math.pi) * np.log(2.0 * np.cos(0.5 * math.pi * np.asarray(x) / h))
    if name == "arcsine_lower":
        h = _half_width(d)

        def g(x):
            s = np.asarray(x, dtype=float) / h
            half_angle = 0.5 * np.arccos(-s)
            return -(2.0 * h / math.pi) * (s * np.log(1.0 / np.tan(half_angle)) + 1.0)

        return g
    if name == "hypsech_parabola":
        s = d.scale
        return lambda x: np.asarray(x, dtype=float) ** 2 / (2.0 * s) - 0.5 * s
    if name == "cauchy_halfplane":
        s = d.scale
        return lambda x: np.full(np.shape(x), -s, dtype=float)
    if name == "arcsine_gross_disc":
        h = _half_width(d)
        return lambda x: -np.sqrt(h * h - np.asarray(x, dtype=float) ** 2)
    raise KeyError(name)


def is_two_point_symmetric(d: Distribution) -> bool:
    return isinstance(d, Atomic) and d.locations.size == 2 and np.allclose(d.weights, 0.5)
