"""Lower boundary curve ``y = gamma(x)`` of the image domain, exit density and membership."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import catalog
from .distributions import Distribution
from .embedding import AnalyticMap, boundary_y
from .errors import DomainError, NumericalError, ValidationError
from .fourier import TWO_PI

__all__ = [
    "BAND",
    "TAIL_DELTA",
    "BoundaryCurve",
    "build_curve",
    "gamma",
    "gamma_direct",
    "gamma_prime",
    "exit_density",
    "membership",
    "write_curve_csv",
]

BAND = 1e-9
TAIL_DELTA = 1e-5
DERIV_LIMIT = 1e6


@dataclass(frozen=True)
class BoundaryCurve:
    """Sampled lower boundary with a shape-preserving cubic interpolant.

    Attributes
    ----------
    support : (float, float)
        ``(alpha, beta)`` of the generating law.
    theta, x, y : ndarray
        Knots; ``x`` strictly increasing.
    variant : str
    closed_form : str or None
        Catalog tag when the law is a builtin with a known curve.
    tail_truncated : bool
        True when the support is unbounded and the knots stop at the
        quantiles ``G(delta)`` and ``G(1 - delta)``.
    """

    support: tuple[float, float]
    theta: np.ndarray
    x: np.ndarray
    y: np.ndarray
    variant: str = "delta_infinity"
    closed_form: str | None = None
    tail_truncated: bool = False
    delta: float = TAIL_DELTA
    source_map: AnalyticMap | None = field(default=None, repr=False, compare=False)
    interpolant: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("theta", "x", "y"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x.size < 2 or np.any(np.diff(self.x) <= 0):
            raise ValidationError("curve knots must be strictly increasing in x")
        object.__setattr__(self, "interpolant", PchipInterpolator(self.x, self.y, extrapolate=False))

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def symmetric(self) -> bool:
        return self.variant == "gross"

    def reference(self):
        """Closed-form ``gamma`` for catalog members, else ``None``."""
        if self.closed_form is None or self.source_map is None:
            return None
        return catalog.closed_form_curve(self.closed_form, self.source_map.source)

    def metadata(self) -> dict:
        return {
            "support": list(self.support),
            "knots": int(self.x.size),
            "x_range": list(self.x_range),
            "variant": self.variant,
            "closed_form": self.closed_form,
            "tail_truncated": self.tail_truncated,
            "tail_delta": self.delta if self.tail_truncated else None,
        }


def _u_grid(d: Distribution, n_grid: int, delta: float, x_step: float | None) -> np.ndarray:
    mid = (np.arange(n_grid) + 0.5) / n_grid
    first = 0.5 / n_grid
    tail = np.geomspace(delta, first, 24, endpoint=False)
    parts = [mid, tail, 1.0 - tail]
    if x_step is not None:
        # even x coverage where the quantile grid thins out
        lo, hi = d.quantile(delta), d.isf(delta)
        xs = np.arange(math.ceil(lo / x_step), math.floor(hi / x_step) + 1) * x_step
        parts.append(np.clip(d.cdf(xs), delta, 1.0 - delta))
    u = np.unique(np.concatenate(parts))
    return u[(u > 0) & (u < 1)]


def build_curve(
    m: AnalyticMap,
    n_grid: int = 4096,
    delta: float = TAIL_DELTA,
    quad_grid: int = 384,
    x_step: float = 0.05,
) -> BoundaryCurve:
    """Sample the lower boundary and fit the monotone interpolant.

    Laws with bounded support use ``n_grid`` midpoints in ``u``; unbounded
    laws, whose conjugate values need adaptive quadrature, use ``quad_grid``
    midpoints plus an even ``x`` grid of spacing ``x_step``. Both add
    geometric tail refinement down to ``u = delta``.
    """
    d = m.source
    if d is None:
        raise ValidationError("building a curve needs the map's generating law")
    if d.is_atomic:
        raise ValidationError("atomic laws give strip-and-slit domains; use slit_tips")
    unbounded = not math.isfinite(d.width)
    if unbounded and m.variant != "formal_cauchy":
        u = _u_grid(d, quad_grid, delta, x_step)
    else:
        u = _u_grid(d, n_grid, delta, None)
    lower = u <= 0.5
    x = np.empty_like(u)
    x[lower] = d.quantile(u[lower])
    x[~lower] = d.isf(1.0 - u[~lower])
    theta = (math.pi if m.variant == "gross" else TWO_PI) * u
    y = boundary_y(m, theta)
    keep = np.concatenate(([True], np.diff(x) > 0)) & np.isfinite(y)
    return BoundaryCurve(
        support=(d.alpha, d.beta),
        theta=theta[keep],
        x=x[keep],
        y=y[keep],
        variant=m.variant,
        closed_form=catalog.catalog_name(d, m.variant),
        tail_truncated=unbounded,
        delta=delta,
        source_map=m,
    )


def _check_x(c: BoundaryCurve, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    a, b = c.support
    if np.any(~((x > a) & (x < b))):
        raise DomainError(f"x must lie in the open support ({a:g}, {b:g})")
    return x


def gamma_direct(c: BoundaryCurve, x):
    """``gamma`` through the conjugate at ``theta = 2pi F(x)`` (no interpolation)."""
    scalar = np.ndim(x) == 0
    x = _check_x(c, x)
    if c.source_map is None:
        raise ValidationError("direct evaluation needs the generating map")
    d = c.source_map.source
    u = np.clip(d.cdf(x), 1e-300, 1.0 - 1e-16)
    theta = (math.pi if c.variant == "gross" else TWO_PI) * u
    y = boundary_y(c.source_map, theta)
    return float(y) if scalar else y


def gamma(c: BoundaryCurve, x):
    """Lower boundary height at ``x`` in the open support.

    Inside the knot range the interpolant is used; in the short stretch
    between the outermost knot and a finite support end the value is
    computed directly.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(_check_x(c, x))
    out = c.interpolant(x)
    lo, hi = c.x_range
    outer = (x < lo) | (x > hi)
    if np.any(outer):
        if c.tail_truncated and c.source_map is None:
            raise DomainError("x lies beyond the truncated tail of the curve")
        out[outer] = gamma_direct(c, x[outer])
    return float(out[0]) if scalar else out


def gamma_prime(c: BoundaryCurve, x):
    """Central difference of ``gamma`` with step ``max(1e-6, 1e-6 |x|)``."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(_check_x(c, x))
    h = np.maximum(1e-6, 1e-6 * np.abs(x))
    a, b = c.support
    if np.any(x - h <= a) or np.any(x + h >= b):
        raise NumericalError("non-differentiable point: too close to the support end")
    g = (gamma(c, x + h) - gamma(c, x - h)) / (2.0 * h)
    if np.any(~np.isfinite(g)) or np.any(np.abs(g) > DERIV_LIMIT):
        raise NumericalError("non-differentiable point: derivative probe diverged")
    return float(g[0]) if scalar else g


def exit_density(c: BoundaryCurve, d: Distribution, x, variant: str | None = None):
    """Exit-point density per unit arclength, ``F'(x) / sqrt(1 + gamma'(x)^2)``.

    The symmetric variant splits the mass between the two mirror arcs, so
    each carries half.
    """
    variant = variant or c.variant
    if variant not in ("delta_infinity", "gross", "formal_cauchy"):
        raise ValidationError(f"unknown variant {variant!r}")
    f = d.density(x)
    if f is None:
        raise ValidationError("density unavailable for this law")
    rho = np.asarray(f, dtype=float) / np.sqrt(1.0 + gamma_prime(c, x) ** 2)
    if variant == "gross":
        rho = 0.5 * rho
    return float(rho) if np.ndim(rho) == 0 else rho


def membership(c: BoundaryCurve, point, band: float = BAND) -> str:
    """Classify a point as ``inside``, ``outside`` or ``boundary-band``."""
    px, py = (float(v) for v in point)
    a, b = c.support
    if not (a < px < b):
        return "outside"
    lo, hi = c.x_range
    if (px < lo or px > hi) and c.tail_truncated:
        return "outside"
    g = gamma(c, px)
    gap = py - g
    if c.symmetric:
        gap = min(gap, -g - py)
    if gap > band:
        return "inside"
    if gap < -band:
        return "outside"
    return "boundary-band"


def write_curve_csv(c: BoundaryCurve, path: str | Path) -> None:
    rows = ["x,gamma(x)"] + [f"{a:.17g},{b:.17g}" for a, b in zip(c.x.tolist(), c.y.tolist())]
    Path(path).write_text("\n".join(rows) + "\n")
