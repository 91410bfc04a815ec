"""Analytic maps on the unit disk built from a law's circle quantile.

A map is ``f(z) = c0 + sum_n c_n z^n - i (kappa/pi) Log(1 - z)``; the log
term is present only for maps built in split mode. On the circle the real
part of ``f`` is the circle quantile and the imaginary part its conjugate
function, so the image domain has the prescribed law as the distribution of
the real part of the Brownian exit point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import catalog
from .distributions import Atomic, Cauchy, Distribution, require_nondegenerate
from .errors import DomainError, NumericalError, ValidationError
from .fourier import (
    DEFAULT_N,
    TWO_PI,
    FourierSeries,
    conjugate_quad,
    conjugate_series,
    fourier_coeffs,
    gross_coeffs,
    phi_gross,
    phi_mu,
    ramp_conjugate,
    series_sum,
)

__all__ = [
    "VARIANTS",
    "EPS_EVAL",
    "MONO_TOL",
    "AnalyticMap",
    "InjectivityDiagnostic",
    "HardyProfile",
    "build_map",
    "eval_map",
    "eval_series",
    "boundary_point",
    "boundary_polyline",
    "injectivity_check",
    "slit_tips",
    "schwarz_eval",
    "hardy_profile",
    "map_csv_text",
    "write_map_csv",
    "read_map_csv",
    "write_polyline_csv",
]

VARIANTS = ("delta_infinity", "gross", "formal_cauchy")
EPS_EVAL = 1e-9
MONO_TOL = 1e-9


@dataclass(frozen=True)
class AnalyticMap:
    """Truncated power series plus an optional closed-form logarithmic term.

    Attributes
    ----------
    c : complex ndarray
        Coefficients of ``z^1 .. z^N``.
    c0 : complex
        Constant term.
    log_weight : float
        ``kappa`` in ``-i (kappa/pi) Log(1 - z)``; zero when absent.
    variant : str
        One of ``delta_infinity``, ``gross``, ``formal_cauchy``.
    source : Distribution or None
        Generating law; ``None`` for maps loaded from disk or built by hand.
    """

    c: np.ndarray
    c0: complex = 0.0
    log_weight: float = 0.0
    variant: str = "delta_infinity"
    source: Distribution | None = None
    series: FourierSeries | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        c = np.array(self.c, dtype=complex).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "c0", complex(self.c0))
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        if not self.log_weight >= 0 or not math.isfinite(self.log_weight):
            raise ValidationError("log_weight must be finite and nonnegative")

    @property
    def N(self) -> int:
        return self.c.size

    @property
    def theorematic(self) -> bool:
        """False for the formal Cauchy construction, which lies outside the theory."""
        return self.variant != "formal_cauchy"

    @property
    def catalog(self) -> str | None:
        if self.source is None:
            return None
        return catalog.catalog_name(self.source, self.variant)

    def closed_form(self) -> Callable | None:
        name = self.catalog
        return None if name is None else catalog.closed_form_map(name, self.source)

    def __call__(self, z):
        return eval_map(self, z)


def build_map(
    d: Distribution,
    N: int = DEFAULT_N,
    variant: str = "delta_infinity",
    mode: str = "auto",
    M: int | None = None,
) -> AnalyticMap:
    """Assemble the disk map of a centered, nondegenerate law.

    Parameters
    ----------
    d : Distribution
    N : int
        Truncation order.
    variant : {"delta_infinity", "gross", "formal_cauchy"}
        ``gross`` uses the even extension of the quantile (cosine series,
        symmetric image). ``formal_cauchy`` applies the construction to a
        centered Cauchy law outside the moment hypotheses.
    mode : {"auto", "split", "direct"}
        Coefficient mode for ``delta_infinity``.
    """
    require_nondegenerate(d)
    if variant == "delta_infinity":
        s = fourier_coeffs(d, N, M=M, mode=mode)
    elif variant == "gross":
        s = gross_coeffs(d, N)
    elif variant == "formal_cauchy":
        if not isinstance(d, Cauchy) or d.loc != 0.0:
            raise ValidationError("formal_cauchy needs a Cauchy law centered at 0")
        s = fourier_coeffs(d, N, M=M, mode="direct")
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    kappa = s.kappa if s.split else 0.0
    return AnalyticMap(s.c, c0=0.5 * s.a0, log_weight=kappa, variant=variant, source=d, series=s)


def _as_disk_points(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1.0 - EPS_EVAL):
        raise DomainError("|z| must be below 1 - 1e-9; use boundary_point for boundary values")
    return z


def eval_series(m: AnalyticMap, z):
    """Truncated series, constant and log term at points of the open disk."""
    scalar = np.ndim(z) == 0
    z = _as_disk_points(z)
    coef = np.concatenate(([m.c0], m.c))
    w = np.polynomial.polynomial.polyval(z, coef)
    if m.log_weight > 0:
        w = w - 1j * (m.log_weight / math.pi) * np.log(1.0 - z)
    return complex(w) if scalar else w


def eval_map(m: AnalyticMap, z):
    """Evaluate the map for ``|z| < 1 - 1e-9``.

    The formal Cauchy map is defined by its closed form ``2i s z / (1 - z)``;
    every other map is its truncated series (plus the log term).
    """
    if m.variant == "formal_cauchy" and m.source is not None:
        scalar = np.ndim(z) == 0
        w = catalog.closed_form_map("cauchy_halfplane", m.source)(_as_disk_points(z))
        return complex(w) if scalar else w
    return eval_series(m, z)


# -- boundary ------------------------------------------------------------------


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(~((theta > 0.0) & (theta < TWO_PI))):
        raise DomainError("theta must lie in the open interval (0, 2pi)")
    return theta


def _needs_quadrature(m: AnalyticMap) -> bool:
    d = m.source
    return d is not None and not d.is_atomic and not math.isfinite(d.width)


def boundary_x(m: AnalyticMap, theta):
    """Real part on the circle; exact quantile when the source law is known."""
    theta = _check_theta(theta)
    if m.source is None:
        return series_sum(m.c, theta).real + m.c0.real + m.log_weight * (theta / TWO_PI - 0.5)
    if m.variant == "gross":
        return phi_gross(m.source, theta)
    return phi_mu(m.source, theta)


def boundary_y(m: AnalyticMap, theta):
    """Imaginary part on the circle (conjugate function of the real part).

    Unbounded laws use adaptive quadrature of the conjugate integral because
    their truncated series converges too slowly near the singular point.
    """
    theta = _check_theta(theta)
    d = m.source
    if m.variant == "formal_cauchy" and d is not None:
        return np.full(theta.shape, -d.scale)
    if _needs_quadrature(m):
        f = (lambda t: phi_gross(d, t)) if m.variant == "gross" else (lambda t: phi_mu(d, t))
        sing = (0.0, math.pi) if m.variant == "gross" else (0.0,)
        flat = [conjugate_quad(f, float(t), singular=sing) for t in theta.ravel()]
        return np.asarray(flat, dtype=float).reshape(theta.shape) + m.c0.imag
    y = series_sum(m.c, theta).imag + m.c0.imag
    if m.log_weight > 0:
        y = y + ramp_conjugate(m.log_weight, theta)
    return y


def boundary_point(m: AnalyticMap, theta):
    """Boundary point ``(x, y)`` at angle ``theta`` in ``(0, 2pi)``.

    ``x`` is the exact circle quantile; ``y`` the conjugate function, with
    the split-mode logarithm evaluated in closed form.
    """
    scalar = np.ndim(theta) == 0
    x = boundary_x(m, theta)
    y = boundary_y(m, theta)
    if scalar:
        return float(x), float(y)
    return x, y


def boundary_polyline(m: AnalyticMap, grid: int = 4096):
    """Boundary samples on the midpoint grid ``theta_k = 2pi (k + 1/2) / grid``."""
    theta = TWO_PI * (np.arange(grid) + 0.5) / grid
    x, y = boundary_point(m, theta)
    return theta, x, y


# -- injectivity -----------------------------------------------------------------


@dataclass(frozen=True)
class InjectivityDiagnostic:
    monotone_violation: float
    self_intersections: int
    verdict: str

    def to_dict(self) -> dict:
        return {
            "monotone_violation": self.monotone_violation,
            "self_intersections": self.self_intersections,
            "verdict": self.verdict,
        }


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def count_self_intersections(x: np.ndarray, y: np.ndarray) -> int:
    """Proper crossings between non-adjacent segments of an open polyline."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    n = x.size - 1
    if n < 3:
        return 0
    x1, y1, x2, y2 = x[:-1], y[:-1], x[1:], y[1:]
    lo = np.minimum(x1, x2)
    hi = np.maximum(x1, x2)
    ylo = np.minimum(y1, y2)
    yhi = np.maximum(y1, y2)
    order = np.argsort(lo, kind="stable")
    lo_sorted = lo[order]
    count = 0
    for rank, i in enumerate(order):
        # candidates start after i in the sweep order and overlap in x
        stop = np.searchsorted(lo_sorted, hi[i], side="right")
        j = order[rank + 1 : stop]
        j = j[np.abs(j - i) > 1]
        if j.size == 0:
            continue
        j = j[(ylo[j] <= yhi[i]) & (yhi[j] >= ylo[i])]
        if j.size == 0:
            continue
        d1 = _orient(x1[i], y1[i], x2[i], y2[i], x1[j], y1[j])
        d2 = _orient(x1[i], y1[i], x2[i], y2[i], x2[j], y2[j])
        d3 = _orient(x1[j], y1[j], x2[j], y2[j], x1[i], y1[i])
        d4 = _orient(x1[j], y1[j], x2[j], y2[j], x2[i], y2[i])
        count += int(np.count_nonzero((d1 * d2 < 0) & (d3 * d4 < 0)))
    return count


def injectivity_check(m: AnalyticMap, grid: int = 4096, mono_tol: float = MONO_TOL) -> InjectivityDiagnostic:
    """Numerical injectivity surrogate on the boundary polyline.

    ``pass`` when x is monotone and the polyline is simple, ``warn`` for a
    monotonicity violation up to ``mono_tol``, ``fail`` otherwise.
    """
    if grid < 256:
        raise ValidationError("grid must be at least 256")
    _, x, y = boundary_polyline(m, grid)
    violation = 0.0
    if m.variant != "gross":
        violation = float(max(0.0, -np.min(np.diff(x))))
    crossings = count_self_intersections(x, y)
    if crossings > 0 or violation > mono_tol:
        verdict = "fail"
    elif violation > 0:
        verdict = "warn"
    else:
        verdict = "pass"
    return InjectivityDiagnostic(violation, crossings, verdict)


# -- atomic laws -------------------------------------------------------------------


def slit_tips(d: Distribution, N: int = 1 << 14, grid: int = 513) -> list[tuple[float, float]]:
    """Upper ends ``(x_k, y_k)`` of the vertical slits at interior atoms.

    On the arc where the circle quantile equals an interior atom the
    conjugate function rises from ``-inf`` and falls back; its maximum is
    the slit tip. Two-atom laws give a plain strip and an empty list.
    """
    require_nondegenerate(d)
    if not isinstance(d, Atomic):
        raise ValidationError("slit tips are defined for atomic laws only")
    pts = d.locations
    if pts.size <= 2:
        return []
    s = fourier_coeffs(d, N, mode="split")
    edges = TWO_PI * np.concatenate(([0.0], d.cumulative))

    def neg_conj(t):
        return -float(conjugate_series(s, t))

    tips = []
    for k in range(1, pts.size - 1):
        a, b = edges[k], edges[k + 1]
        t = a + (b - a) * (np.arange(grid) + 0.5) / grid
        vals = conjugate_series(s, t)
        j = int(np.clip(np.argmax(vals), 1, grid - 2))
        res = optimize.minimize_scalar(neg_conj, bracket=(t[j - 1], t[j], t[j + 1]), method="golden",
                                       tol=1e-10)
        tips.append((float(pts[k]), -float(res.fun)))
    return tips


# -- Schwarz reconstruction -------------------------------------------------------------


def schwarz_eval(
    boundary_real: Callable[[np.ndarray], np.ndarray],
    z,
    M: int = 4096,
    tol: float = 1e-6,
    settle: float = 1e-9,
    max_M: int = 1 << 22,
):
    """Analytic function with prescribed real boundary values, at interior points.

    Midpoint rule for ``(1/2pi) int (e^{it} + z)/(e^{it} - z) u(t) dt``,
    doubling ``M`` until two successive values agree to ``settle``. The
    imaginary part vanishes at the origin by construction.
    """
    if M < 1024:
        raise ValidationError("M must be at least 1024")
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) > 0.9):
        raise DomainError("schwarz_eval needs |z| <= 0.9")

    def rule(m):
        t = TWO_PI * (np.arange(m) + 0.5) / m
        u = np.asarray(boundary_real(t), dtype=float)
        e = np.exp(1j * t)
        out = np.empty(z.size, dtype=complex)
        for s in range(0, z.size, 16):
            zz = z[s : s + 16, None]
            out[s : s + 16] = ((e + zz) / (e - zz)) @ u / m
        return out

    prev = rule(M)
    while True:
        M *= 2
        cur = rule(M)
        change = float(np.max(np.abs(cur - prev)))
        if change <= settle:
            break
        if M >= max_M:
            if change > tol:
                raise NumericalError(f"Schwarz quadrature did not converge (change {change:.3g})")
            break
        prev = cur
    return complex(cur[0]) if scalar else cur


# -- Hardy profile ----------------------------------------------------------------------


@dataclass(frozen=True)
class HardyProfile:
    r: np.ndarray
    values: np.ndarray
    p: float
    monotone: bool

    @property
    def sup(self) -> float:
        return float(np.max(self.values)) if self.values.size else 0.0


def _circle_mean_fft(m: AnalyticMap, r: float, p: float) -> float:
    size = max(2 * m.N, int(64.0 / (1.0 - r)), 256)
    size = 1 << int(math.ceil(math.log2(size)))
    coef = np.zeros(size, dtype=complex)
    n = np.arange(1, m.N + 1)
    np.add.at(coef, n % size, m.c * r**n)
    coef[0] += m.c0
    vals = np.fft.ifft(coef) * size
    if m.log_weight > 0:
        t = TWO_PI * np.arange(size) / size
        vals = vals - 1j * (m.log_weight / math.pi) * np.log(1.0 - r * np.exp(1j * t))
    return float(np.mean(np.abs(vals) ** p))


def _graded_panels(r: float) -> np.ndarray:
    # panel edges on [0, pi] refined geometrically toward both ends
    h0 = max(1e-3 * (1.0 - r), 1e-14)
    left = [0.0]
    w = h0
    while left[-1] + w < 0.05:
        left.append(left[-1] + w)
        w *= 1.6
    core = np.linspace(left[-1], math.pi - left[-1], 64)
    right = math.pi - np.array(left[::-1])
    return np.unique(np.concatenate((left, core, right)))


def _circle_mean_graded(f: Callable, r: float, p: float, q: int = 20) -> float:
    x, w = np.polynomial.legendre.leggauss(q)
    edges = _graded_panels(r)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (b - a) * (x + 1.0) + a).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    t_all = np.concatenate((t, TWO_PI - t))
    w_all = np.concatenate((wt, wt))
    vals = np.abs(f(r * np.exp(1j * t_all))) ** p
    return float(w_all @ vals / TWO_PI)


def hardy_profile(m: AnalyticMap, p: float = 2.0, r_grid: Sequence[float] = (0.1, 0.3, 0.5, 0.7, 0.9),
                  tol: float = 1e-10) -> HardyProfile:
    """Integral means ``N_r = (mean |f(r e^{it})|^p)^{1/p}`` over a radius grid.

    The supremum over the grid estimates the ``H^p`` norm; finiteness of
    that norm is equivalent to a finite ``p/2`` moment of the exit time.
    """
    if not p > 1:
        raise ValidationError("p must exceed 1")
    r = np.asarray(r_grid, dtype=float)
    if r.size and (np.any(r < 0) or np.any(r >= 1) or np.any(np.diff(r) <= 0)):
        raise ValidationError("r_grid must be strictly increasing in [0, 1)")
    closed = m.variant == "formal_cauchy" and m.source is not None
    out = np.empty(r.size)
    for k, rk in enumerate(r):
        if rk == 0.0:
            mean = abs(m.c0) ** p
        elif closed:
            mean = _circle_mean_graded(lambda z: eval_map(m, z), rk, p)
        else:
            mean = _circle_mean_fft(m, rk, p)
        out[k] = mean ** (1.0 / p)
    mono = bool(np.all(np.diff(out) >= -tol * np.maximum(1.0, out[1:]))) if out.size > 1 else True
    return HardyProfile(r, out, p, mono)


# -- CSV I/O ---------------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _log_coeffs(kappa: float, N: int) -> np.ndarray:
    # Taylor coefficients of -i (kappa/pi) Log(1 - z)
    return 1j * kappa / (math.pi * np.arange(1, N + 1))


def map_csv_text(m: AnalyticMap) -> str:
    """``n,Re(c_n),Im(c_n)`` rows under a ``log_weight=.. c0=re,im variant=..`` header.

    Rows carry the full coefficients, log term included, so the file reads as
    the plain Fourier data ``a_n - i b_n``; ``log_weight`` tells the reader
    which part to evaluate in closed form.
    """
    head = f"log_weight={_fmt(m.log_weight)} c0={_fmt(m.c0.real)},{_fmt(m.c0.imag)} variant={m.variant}"
    full = m.c + _log_coeffs(m.log_weight, m.N) if m.log_weight > 0 else m.c
    rows = [f"{n},{_fmt(c.real)},{_fmt(c.imag)}" for n, c in enumerate(full.tolist(), 1)]
    return "\n".join([head] + rows) + "\n"


def write_map_csv(m: AnalyticMap, path: str | Path) -> None:
    Path(path).write_text(map_csv_text(m))


def read_map_csv(path: str | Path) -> AnalyticMap:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty map file")
    try:
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        kappa = float(head["log_weight"])
        re, im = (float(v) for v in head["c0"].split(","))
        variant = head.get("variant", "delta_infinity")
        rows = [ln.split(",") for ln in lines[1:] if ln.strip()]
        n = np.array([int(r[0]) for r in rows], dtype=int)
        c = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    except (KeyError, ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: malformed map file ({exc})") from None
    if not np.array_equal(n, np.arange(1, n.size + 1)):
        raise ValidationError(f"{path}: orders must run 1..N without gaps")
    if kappa > 0:
        c = c - _log_coeffs(kappa, c.size)
    return AnalyticMap(c, c0=complex(re, im), log_weight=kappa, variant=variant)


def write_polyline_csv(theta, x, y, path: str | Path) -> None:
    rows = ["theta,x,y"] + [f"{_fmt(t)},{_fmt(a)},{_fmt(b)}" for t, a, b in zip(theta, x, y)]
    Path(path).write_text("\n".join(rows) + "\n")
