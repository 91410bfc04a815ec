"""One-dimensional probability laws: CDF, quantile, density, support and moments.

Every law is immutable once built. The quantile is the right-continuous
generalized inverse ``G(u) = sup{t : F(t) <= u}``, which is what the
domain construction consumes. Builtin laws expose closed forms; custom
laws fall back to numeric inversion of the CDF.

Text specs are flat ``key=value`` tokens, e.g.::

    kind=uniform a=-1 b=1
    kind=atomic points=-1:0.5,1:0.5
    kind=empirical file=draws.csv
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from .errors import (
    DegenerateDistributionError,
    DomainError,
    UncenterableError,
    ValidationError,
)

__all__ = [
    "CENTER_TOL",
    "TOL_Q",
    "Distribution",
    "Uniform",
    "Arcsine",
    "HypSecant",
    "Gaussian",
    "Cauchy",
    "Atomic",
    "Custom",
    "SupportMoments",
    "cdf",
    "quantile",
    "density",
    "support_and_moments",
    "center",
    "from_samples",
    "read_samples_csv",
    "parse_dist",
    "require_nondegenerate",
]

CENTER_TOL = 1e-10
TOL_Q = 1e-12


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _check_unit_interval(u) -> np.ndarray:
    u = _as_float_array(u)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("quantile level must lie in the open interval (0, 1)")
    return u


class Distribution:
    """Base class for laws on the real line.

    Subclasses fill in ``_cdf``, ``_quantile`` and optionally ``_isf`` (the
    quantile at ``1 - q`` computed without cancellation) and ``_density``.
    """

    kind: str = "custom"
    alpha: float = -math.inf
    beta: float = math.inf
    mean: float = math.nan
    has_mean: bool = True

    @property
    def support(self) -> tuple[float, float]:
        return (self.alpha, self.beta)

    @property
    def width(self) -> float:
        """Length of the smallest closed interval carrying the law."""
        return self.beta - self.alpha

    @property
    def is_centered(self) -> bool:
        return self.has_mean and abs(self.mean) <= CENTER_TOL

    @property
    def is_point_mass(self) -> bool:
        return False

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return []

    @property
    def is_atomic(self) -> bool:
        return False

    def cdf(self, x):
        return self._cdf(_as_float_array(x))

    def quantile(self, u):
        return self._quantile(_check_unit_interval(u))

    def isf(self, q):
        """Quantile at level ``1 - q``, accurate for tiny ``q``."""
        return self._isf(_check_unit_interval(q))

    def density(self, x):
        """Density at ``x``, or ``None`` when the law has no density."""
        return None

    def shifted(self, c: float) -> "Distribution":
        raise NotImplementedError

    def scaled_to(self) -> float:
        """A characteristic length used for relative tolerances."""
        if math.isfinite(self.width):
            return self.width
        return 1.0

    # default tail accessor; builtins override with cancellation-free forms
    def _isf(self, q):
        return self._quantile(1.0 - q)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(support={self.support}, mean={self.mean:.6g})"


@dataclass(frozen=True, repr=False)
class Uniform(Distribution):
    a: float = -1.0
    b: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValidationError("uniform law needs a < b")

    @property
    def alpha(self):
        return self.a

    @property
    def beta(self):
        return self.b

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    def _cdf(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _quantile(self, u):
        return self.a + (self.b - self.a) * u

    def _isf(self, q):
        return self.b - (self.b - self.a) * q

    def density(self, x):
        x = _as_float_array(x)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def shifted(self, c):
        return Uniform(self.a + c, self.b + c)


@dataclass(frozen=True, repr=False)
class Arcsine(Distribution):
    """Arcsine law on ``(a, b)`` with quantile ``mid - half*cos(pi u)``."""

    a: float = -1.0
    b: float = 1.0
    kind = "arcsine"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValidationError("arcsine law needs a < b")

    @property
    def alpha(self):
        return self.a

    @property
    def beta(self):
        return self.b

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def _half(self):
        return 0.5 * (self.b - self.a)

    def _cdf(self, x):
        s = np.clip((x - self.mean) / self._half, -1.0, 1.0)
        return np.arccos(-s) / math.pi

    def _quantile(self, u):
        return self.mean - self._half * np.cos(math.pi * u)

    def _isf(self, q):
        return self.mean + self._half * np.cos(math.pi * q)

    def density(self, x):
        x = _as_float_array(x)
        r = self._half**2 - (x - self.mean) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, 1.0 / (math.pi * np.sqrt(np.where(r > 0, r, 1.0))), 0.0)
        return out

    def shifted(self, c):
        return Arcsine(self.a + c, self.b + c)


@dataclass(frozen=True, repr=False)
class HypSecant(Distribution):
    """Hyperbolic secant law with density ``sech(pi (x-loc) / (2 scale)) / (2 scale)``.

    ``scale=1`` is the unit-variance law; ``scale=1/sqrt(2)`` gives the
    density ``sech(pi x / sqrt(2)) / sqrt(2)``.
    """

    loc: float = 0.0
    scale: float = 1.0
    kind = "hypsech"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError("hypsech scale must be positive")

    @property
    def mean(self):
        return self.loc

    def _cdf(self, x):
        return (2.0 / math.pi) * np.arctan(np.exp(math.pi * (x - self.loc) / (2.0 * self.scale)))

    def _quantile(self, u):
        return self.loc + (2.0 * self.scale / math.pi) * np.log(np.tan(0.5 * math.pi * u))

    def _isf(self, q):
        return self.loc - (2.0 * self.scale / math.pi) * np.log(np.tan(0.5 * math.pi * q))

    def density(self, x):
        x = _as_float_array(x)
        t = np.exp(-np.abs(math.pi * (x - self.loc) / (2.0 * self.scale)))
        # sech(a) = 2 e^{-|a|} / (1 + e^{-2|a|}), free of overflow
        return t / (self.scale * (1.0 + t * t))

    def shifted(self, c):
        return HypSecant(self.loc + c, self.scale)


@dataclass(frozen=True, repr=False)
class Gaussian(Distribution):
    mu: float = 0.0
    sd: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.sd > 0:
            raise ValidationError("gaussian sd must be positive")

    @property
    def mean(self):
        return self.mu

    def _cdf(self, x):
        return special.ndtr((x - self.mu) / self.sd)

    def _quantile(self, u):
        return self.mu + self.sd * special.ndtri(u)

    def _isf(self, q):
        return self.mu - self.sd * special.ndtri(q)

    def density(self, x):
        x = _as_float_array(x)
        z = (x - self.mu) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2.0 * math.pi))

    def shifted(self, c):
        return Gaussian(self.mu + c, self.sd)


@dataclass(frozen=True, repr=False)
class Cauchy(Distribution):
    """Cauchy law. It has no mean; only the formal map variant accepts it."""

    loc: float = 0.0
    scale: float = 1.0
    kind = "cauchy"
    has_mean = False

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError("cauchy scale must be positive")

    @property
    def mean(self):
        return math.nan

    @property
    def is_centered(self) -> bool:
        # symmetric about loc; the formal construction only needs that
        return abs(self.loc) <= CENTER_TOL

    def _cdf(self, x):
        return 0.5 + np.arctan((x - self.loc) / self.scale) / math.pi

    def _quantile(self, u):
        return self.loc - self.scale / np.tan(math.pi * u)

    def _isf(self, q):
        return self.loc + self.scale / np.tan(math.pi * q)

    def density(self, x):
        x = _as_float_array(x)
        z = (x - self.loc) / self.scale
        return 1.0 / (math.pi * self.scale * (1.0 + z * z))

    def shifted(self, c):
        return Cauchy(self.loc + c, self.scale)


class Atomic(Distribution):
    """Finitely many atoms ``sum_k w_k delta_{x_k}``.

    ``kind`` is ``"empirical"`` when built from raw samples.
    """

    def __init__(self, points: Sequence[float], weights: Sequence[float], kind: str = "atomic"):
        x = np.asarray(points, dtype=float)
        w = np.asarray(weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size == 0:
            raise ValidationError("atomic law needs matching, nonempty point and weight lists")
        if not np.all(np.isfinite(x)):
            raise ValidationError("atom locations must be finite")
        if np.any(w <= 0) or np.any(w > 1 + 1e-12):
            raise ValidationError("atom weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError(f"atom weights sum to {w.sum():.12g}, not 1")
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        # merge repeated locations so atoms are strictly increasing
        ux, inv = np.unique(x, return_inverse=True)
        uw = np.zeros_like(ux)
        np.add.at(uw, inv, w)
        uw = uw / uw.sum()
        self._x = ux
        self._w = uw
        cum = np.cumsum(uw)
        cum[-1] = 1.0
        self._cum = cum
        self.kind = kind

    @property
    def locations(self) -> np.ndarray:
        return self._x.copy()

    @property
    def weights(self) -> np.ndarray:
        return self._w.copy()

    @property
    def cumulative(self) -> np.ndarray:
        return self._cum.copy()

    @property
    def atoms(self):
        return [(float(a), float(b)) for a, b in zip(self._x, self._w)]

    @property
    def is_atomic(self):
        return True

    @property
    def is_point_mass(self):
        return self._x.size == 1

    @property
    def alpha(self):
        return float(self._x[0])

    @property
    def beta(self):
        return float(self._x[-1])

    @property
    def mean(self):
        return float(np.dot(self._x, self._w))

    def _cdf(self, x):
        idx = np.searchsorted(self._x, x, side="right")
        cum = np.concatenate(([0.0], self._cum))
        return cum[idx]

    def _quantile(self, u):
        # sup{t : F(t) <= u}: first atom whose cumulative weight exceeds u
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, self._x.size - 1)
        return self._x[idx]

    def _isf(self, q):
        return self._quantile(1.0 - q)

    def shifted(self, c):
        return Atomic(self._x + c, self._w, kind=self.kind)

    def __repr__(self):
        return f"Atomic(kind={self.kind!r}, n_atoms={self._x.size}, mean={self.mean:.6g})"


class Custom(Distribution):
    """Law given by a user CDF, optionally with its density.

    The quantile is found numerically: bisection on a monotone bracket,
    refined by Newton steps that are kept only when they stay inside it.
    """

    kind = "custom"

    def __init__(
        self,
        cdf: Callable,
        density: Callable | None = None,
        support: tuple[float, float] = (-math.inf, math.inf),
        mean: float | None = None,
    ):
        self._cdf_fn = cdf
        self._pdf_fn = density
        self.alpha, self.beta = float(support[0]), float(support[1])
        if not self.alpha < self.beta:
            raise ValidationError("custom support needs alpha < beta")
        if mean is None:
            mean = _quantile_integral(self, 1.0, signed=True)
        self.mean = float(mean)
        self.has_mean = math.isfinite(self.mean)

    def _cdf(self, x):
        return np.clip(np.asarray(self._cdf_fn(x), dtype=float), 0.0, 1.0)

    def density(self, x):
        if self._pdf_fn is None:
            return None
        return np.asarray(self._pdf_fn(_as_float_array(x)), dtype=float)

    def _quantile(self, u):
        x = _invert_cdf(self._cdf, self._pdf_fn, u, self.alpha, self.beta)
        return x.reshape(np.shape(u))

    def shifted(self, c):
        cdf_fn, pdf_fn = self._cdf_fn, self._pdf_fn
        shifted_pdf = None if pdf_fn is None else (lambda x: pdf_fn(np.asarray(x) - c))
        return Custom(
            lambda x: cdf_fn(np.asarray(x) - c),
            shifted_pdf,
            (self.alpha + c, self.beta + c),
            mean=self.mean + c,
        )


def _invert_cdf(F, f, u, alpha, beta, tol=TOL_Q, max_iter=400):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lo = np.full(u.shape, alpha if math.isfinite(alpha) else -1.0)
    hi = np.full(u.shape, beta if math.isfinite(beta) else 1.0)
    # widen infinite ends until F(lo) <= u < F(hi)
    for _ in range(2100):
        bad_lo = (F(lo) > u) & ~np.isclose(lo, alpha)
        bad_hi = (F(hi) <= u) & ~np.isclose(hi, beta)
        if not (bad_lo.any() or bad_hi.any()):
            break
        width = hi - lo
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        Fm = F(mid)
        if f is not None:
            fm = np.asarray(f(mid), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = mid - (Fm - u) / fm
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            trial = np.where(ok, newton, mid)
            Ft = F(trial)
        else:
            trial, Ft = mid, Fm
        below = Ft <= u
        lo = np.where(below, trial, lo)
        hi = np.where(below, hi, trial)
        # a Newton step that overshoots still leaves a valid bracket; also bisect
        mid2 = 0.5 * (lo + hi)
        below2 = F(mid2) <= u
        lo = np.where(below2, mid2, lo)
        hi = np.where(below2, hi, mid2)
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(lo))):
            break
    return 0.5 * (lo + hi)


def require_nondegenerate(d: Distribution) -> None:
    """Raise the dedicated error when ``d`` is a point mass."""
    if d.is_point_mass:
        raise DegenerateDistributionError()


# module-level operations -----------------------------------------------------


def cdf(d: Distribution, x):
    return d.cdf(x)


def quantile(d: Distribution, u):
    return d.quantile(u)


def density(d: Distribution, x):
    """``F'(x)`` for laws with a density, otherwise ``None`` ("unavailable")."""
    return d.density(x)


class SupportMoments(NamedTuple):
    alpha: float
    beta: float
    mean: float
    p_moment: float
    nondegenerate: bool


def _quantile_integral(d: Distribution, p: float, signed: bool = False, span: float = 20.0) -> float:
    """Integral over (0,1) of |G(u)|^p (or G(u) when ``signed``).

    Uses ``u = (1 + tanh v) / 2`` so that both endpoint regions are
    resolved without sampling tails in x-space.
    """

    def integrand_left(v):
        u = special.expit(2.0 * v)
        g = float(d._quantile(np.array([u]))[0])
        w = 0.5 / math.cosh(v) ** 2
        return (g if signed else abs(g) ** p) * w

    def integrand_right(v):
        q = special.expit(-2.0 * v)
        g = float(d._isf(np.array([q]))[0])
        w = 0.5 / math.cosh(v) ** 2
        return (g if signed else abs(g) ** p) * w

    def total(L):
        left, _ = integrate.quad(integrand_left, -L, 0.0, limit=400, epsabs=1e-15, epsrel=1e-12)
        right, _ = integrate.quad(integrand_right, 0.0, L, limit=400, epsabs=1e-15, epsrel=1e-12)
        return left + right

    if signed:
        i1 = total(span)
        ia1 = _quantile_integral(d, 1.0, signed=False, span=span)
        if not math.isfinite(ia1):
            return math.nan
        return i1
    i1, i2 = total(span), total(2 * span)
    if not (math.isfinite(i1) and math.isfinite(i2)):
        return math.inf
    if i2 > i1 * (1.0 + 1e-6) + 1e-300:
        return math.inf
    return i2


def support_and_moments(d: Distribution, p: float) -> SupportMoments:
    """Support endpoints, mean, ``E|X|^p`` and the nondegeneracy flag."""
    if not p > 1:
        raise ValidationError("moment order p must exceed 1")
    if d.is_atomic:
        x, w = d.locations, d.weights
        pm = float(np.dot(np.abs(x) ** p, w))
    elif isinstance(d, Uniform) and d.mean == 0.0:
        pm = d.b**p / (p + 1.0)
    else:
        pm = _quantile_integral(d, p)
    mean = d.mean if d.has_mean else math.nan
    return SupportMoments(d.alpha, d.beta, mean, pm, not d.is_point_mass)


def center(d: Distribution) -> Distribution:
    """Shift ``d`` so its mean is zero; a no-op for centered inputs."""
    if not d.has_mean or not math.isfinite(d.mean):
        raise UncenterableError("uncenterable: the law has no finite mean")
    if d.is_centered:
        return d
    out = d.shifted(-d.mean)
    if isinstance(out, Atomic) and abs(out.mean) > CENTER_TOL:
        # one refinement removes residual rounding in the weighted sum
        out = out.shifted(-out.mean)
    return out


def from_samples(values: Sequence[float], centered: bool = False) -> Atomic:
    """Empirical law of ``values``: equal-weight atoms, merged on ties."""
    x = np.asarray(list(values), dtype=float)
    if x.size < 2:
        raise ValidationError("degenerate sample: need at least two values")
    if not np.all(np.isfinite(x)):
        raise ValidationError("samples must be finite reals")
    if np.all(x == x[0]):
        raise DegenerateDistributionError("degenerate sample: all values are equal, a point mass")
    d = Atomic(x, np.full(x.size, 1.0 / x.size), kind="empirical")
    return center(d) if centered else d


def read_samples_csv(path: str | Path) -> list[float]:
    """Read a single-column CSV of decimal reals (an optional header is skipped)."""
    out: list[float] = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                out.append(float(row[0]))
            except ValueError:
                if i == 0 and not out:
                    continue
                raise ValidationError(f"{path}: line {i + 1} is not a decimal real: {row[0]!r}")
    return out


def _parse_points(text: str) -> tuple[list[float], list[float]]:
    xs, ws = [], []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            loc, weight = item.split(":")
            xs.append(float(loc))
            ws.append(float(weight))
        except ValueError:
            raise ValidationError(f"malformed atom {item!r}; expected location:weight")
    return xs, ws


_PARAMS = {
    "uniform": {"a": -1.0, "b": 1.0},
    "arcsine": {"a": -1.0, "b": 1.0},
    "hypsech": {"loc": 0.0, "scale": 1.0},
    "gaussian": {"mean": 0.0, "sd": 1.0},
    "cauchy": {"loc": 0.0, "scale": 1.0},
    "point": {"loc": 0.0},
}


def parse_dist(text: str, base_dir: str | Path | None = None) -> Distribution:
    """Build a law from a flat ``key=value`` spec string."""
    fields: dict[str, str] = {}
    for token in text.split():
        if "=" not in token:
            raise ValidationError(f"malformed token {token!r} in distribution spec")
        k, v = token.split("=", 1)
        fields[k.strip().lower()] = v.strip()
    kind = fields.pop("kind", None)
    if kind is None:
        raise ValidationError("distribution spec needs kind=...")
    kind = kind.lower()

    if kind in _PARAMS:
        params = dict(_PARAMS[kind])
        for k, v in fields.items():
            if k not in params:
                raise ValidationError(f"unknown key {k!r} for kind={kind}")
            try:
                params[k] = float(v)
            except ValueError:
                raise ValidationError(f"{k}={v!r} is not a number")
        if kind == "uniform":
            return Uniform(params["a"], params["b"])
        if kind == "arcsine":
            return Arcsine(params["a"], params["b"])
        if kind == "hypsech":
            return HypSecant(params["loc"], params["scale"])
        if kind == "gaussian":
            return Gaussian(params["mean"], params["sd"])
        if kind == "cauchy":
            return Cauchy(params["loc"], params["scale"])
        return Atomic([params["loc"]], [1.0])
    if kind == "atomic":
        if set(fields) != {"points"}:
            raise ValidationError("kind=atomic takes exactly points=x:w,...")
        return Atomic(*_parse_points(fields["points"]))
    if kind == "empirical":
        if "file" in fields:
            path = Path(fields["file"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return from_samples(read_samples_csv(path))
        if "values" in fields:
            try:
                return from_samples([float(v) for v in fields["values"].split(",") if v])
            except ValueError:
                raise ValidationError("values= must be comma-separated reals")
        raise ValidationError("kind=empirical needs file=... or values=...")
    raise ValidationError(f"unknown distribution kind {kind!r}")
