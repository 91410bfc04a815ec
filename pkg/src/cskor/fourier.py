"""Fourier coefficients of the circle quantile and its periodic Hilbert transform.

The circle quantile of a law is ``phi(theta) = G(theta / 2pi)`` on ``(0, 2pi)``.
Its Fourier series ``sum a_n cos(n theta) + b_n sin(n theta)`` has conjugate
series ``sum a_n sin(n theta) - b_n cos(n theta)``. Throughout, the complex
coefficient ``c_n = a_n - i b_n`` is stored, so that

    sum_n c_n e^{i n theta} = phi(theta) + i H{phi}(theta)

for the truncated series.

When the support is bounded, ``phi`` jumps by ``-kappa`` across
``theta = 0`` (``kappa = beta - alpha``). Split mode subtracts the ramp
``kappa*theta/(2pi) - kappa/2``, whose analytic completion is
``-i (kappa/pi) Log(1 - z)`` and whose conjugate on the circle is
``-(kappa/pi) ln(2 sin(theta/2))``. The remainder is continuous on the circle,
so its coefficients decay quickly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .distributions import (
    CENTER_TOL,
    Atomic,
    Cauchy,
    Distribution,
    require_nondegenerate,
    support_and_moments,
)
from .errors import DomainError, NumericalError, ValidationError

__all__ = [
    "DEFAULT_N",
    "FourierSeries",
    "phi_mu",
    "phi_gross",
    "fourier_coeffs",
    "gross_coeffs",
    "series_sum",
    "conjugate_series",
    "ramp_conjugate",
    "quantile_conjugate",
    "hilbert_pv",
    "conjugate_quad",
    "circle_quantile_grid",
    "read_series_csv",
    "write_series_csv",
]

DEFAULT_N = 4096
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FourierSeries:
    """Truncated Fourier data of a real function on the circle.

    ``a[n-1]`` and ``b[n-1]`` hold the order-``n`` cosine and sine
    coefficients. ``kappa`` is the jump removed in split mode (``inf`` for
    unbounded support, ``0`` for even/Gross data).
    """

    a: np.ndarray
    b: np.ndarray
    a0: float = 0.0
    kappa: float = 0.0
    split: bool = False
    moment_warning: bool = False
    variant: str = "delta_infinity"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValidationError("cosine and sine coefficient arrays must match")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def N(self) -> int:
        return self.a.size

    @property
    def c(self) -> np.ndarray:
        """Complex power-series coefficients ``a_n - i b_n``, n = 1..N."""
        return self.a - 1j * self.b

    @classmethod
    def from_complex(cls, c: np.ndarray, **kw) -> "FourierSeries":
        c = np.asarray(c, dtype=complex)
        return cls(c.real.copy(), -c.imag.copy(), **kw)

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        if not isinstance(other, FourierSeries):
            return NotImplemented
        n = max(self.N, other.N)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.N] += self.a
        b[: self.N] += self.b
        a[: other.N] += other.a
        b[: other.N] += other.b
        return FourierSeries(
            a,
            b,
            a0=self.a0 + other.a0,
            kappa=self.kappa + other.kappa,
            split=self.split or other.split,
        )

    def conjugate(self) -> "FourierSeries":
        """Coefficients of the conjugate series (ramp term not included)."""
        return FourierSeries(-self.b, self.a.copy(), a0=0.0)

    def dilate(self, lam: float) -> "FourierSeries":
        """Series of ``theta -> f(lam * theta)`` for a trigonometric polynomial.

        Every surviving order ``lam * n`` must be an integer.
        """
        if lam <= 0:
            raise ValidationError("dilation factor must be positive")
        n = np.arange(1, self.N + 1)
        active = (self.a != 0) | (self.b != 0)
        new = lam * n[active]
        if not np.allclose(new, np.round(new)):
            raise ValidationError("dilation leaves the integer harmonics")
        new = np.round(new).astype(int)
        size = int(new.max()) if new.size else 1
        a = np.zeros(size)
        b = np.zeros(size)
        a[new - 1] = self.a[active]
        b[new - 1] = self.b[active]
        return FourierSeries(a, b, a0=self.a0)

    def truncated(self, n: int) -> "FourierSeries":
        return replace(self, a=self.a[:n].copy(), b=self.b[:n].copy())


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(~((theta > 0.0) & (theta < TWO_PI))):
        raise DomainError("theta must lie in the open interval (0, 2pi)")
    return theta


def phi_mu(d: Distribution, theta):
    """Circle quantile ``G(theta / 2pi)`` for ``theta`` in ``(0, 2pi)``."""
    theta = _check_theta(theta)
    return d.quantile(theta / TWO_PI)


def phi_gross(d: Distribution, theta):
    """Even extension ``G(|theta| / pi)`` with ``theta`` taken modulo ``2pi``."""
    theta = np.asarray(theta, dtype=float)
    t = np.abs(np.remainder(theta + math.pi, TWO_PI) - math.pi)
    u = t / math.pi
    edge = (u <= 0.0) | (u >= 1.0)
    if not np.any(edge):
        return d.quantile(u)
    if not math.isfinite(d.width):
        raise DomainError("even extension is unbounded at theta = 0 and pi")
    out = np.where(u <= 0.0, d.alpha, d.beta).astype(float)
    out[~edge] = d.quantile(u[~edge])
    return out if out.ndim else float(out)


def circle_quantile_grid(d: Distribution, M: int) -> np.ndarray:
    """``G`` at the midpoints ``(k + 1/2) / M``, upper half through ``isf``."""
    k = np.arange(M)
    out = np.empty(M)
    lo = k < M // 2
    out[lo] = d.quantile((k[lo] + 0.5) / M)
    out[~lo] = d.isf((M - k[~lo] - 0.5) / M)
    return out


def _midpoint_transform(values: np.ndarray, N: int) -> tuple[np.ndarray, float]:
    """``(1/pi) int f e^{-in theta}`` for n = 1..N by the midpoint rule."""
    M = values.size
    spec = np.fft.fft(values)
    n = np.arange(1, N + 1)
    c = (2.0 / M) * np.exp(-1j * math.pi * n / M) * spec[n % M]
    a0 = 2.0 * float(np.mean(values))
    return c, a0


def _ramp_coeffs(kappa: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1)
    return 1j * kappa / (math.pi * n)


def _atomic_coeffs(d: Atomic, N: int, length: float = TWO_PI) -> np.ndarray:
    """Exact ``(2/length) int_0^length G(t/length) e^{-int} dt`` for a step quantile."""
    x = d.locations
    edges = length * np.concatenate(([0.0], d.cumulative))
    n = np.arange(1, N + 1)
    out = np.zeros(N, dtype=complex)
    # chunk over orders to bound memory for large samples
    for start in range(0, N, 512):
        nn = n[start : start + 512][:, None]
        e = np.exp(-1j * nn * edges[None, :])
        out[start : start + 512] = ((e[:, :-1] - e[:, 1:]) @ x) / (1j * nn[:, 0])
    return out * (2.0 / length)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre01(q: int) -> tuple[np.ndarray, np.ndarray]:
    if q not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(q)
        _GL_CACHE[q] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[q]


def _panel_transform(
    f_edge: Callable[[np.ndarray, np.ndarray], np.ndarray],
    length: float,
    N: int,
    K: int,
    q: int = 16,
    levels: int = 26,
    ratio: float = 0.15,
) -> np.ndarray:
    """``int_0^length f e^{-in t} dt`` for n = 0..N, f singular only at the ends.

    ``f_edge(t, length - t)`` evaluates f from both distances so that values
    near either end avoid cancellation. Uniform Gauss-Legendre panels in the
    middle are summed with FFTs; the two end panels are graded geometrically
    toward the singular endpoints.
    """
    m = int(round(TWO_PI / length))
    if not math.isclose(m * length, TWO_PI):
        raise ValidationError("panel transform needs length = 2pi / integer")
    if K < N + 2:
        raise ValidationError("panel count must exceed the truncation order")
    h = length / K
    xi, wq = _gauss_legendre01(q)
    n = np.arange(N + 1)

    p = np.arange(1, K - 1)
    t_lo = (p[:, None] + xi[None, :]) * h
    t_hi = (K - p[:, None] - xi[None, :]) * h
    vals = f_edge(t_lo, t_hi)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("non-finite quantile values inside the support")
    L = m * K
    padded = np.zeros((L, q))
    padded[1 : K - 1, :] = vals
    spec = np.fft.fft(padded, axis=0)[n % L, :]
    phase = np.exp(-1j * np.outer(n, xi * h))
    total = h * np.sum(spec * phase * wq[None, :], axis=1)

    # geometric grading inside the first and last panel
    edges = h * ratio ** np.arange(levels + 1)
    a_e, b_e = edges[1:], edges[:-1]
    widths = b_e - a_e
    t_small = (a_e[:, None] + widths[:, None] * xi[None, :]).ravel()
    w_small = (widths[:, None] * wq[None, :]).ravel()
    tail = np.concatenate((t_small, [0.5 * edges[-1]]))
    wtail = np.concatenate((w_small, [edges[-1]]))
    v_left = f_edge(tail, length - tail)
    v_right = f_edge(length - tail, tail)
    for v, pos in ((v_left, tail), (v_right, length - tail)):
        ok = np.isfinite(v)
        if not ok[:-1].all():
            raise NumericalError("non-finite quantile values near the support edge")
        v = np.where(ok, v, 0.0)
        total += np.exp(-1j * np.outer(n, pos)) @ (v * wtail)
    return total


def _graded_coeffs(f_edge, length: float, N: int, tol: float = 1e-12) -> np.ndarray:
    """Refine the panel transform by doubling until it stops moving."""
    K = 1 << max(6, int(math.ceil(math.log2(N + 2))) + 1)
    prev = _panel_transform(f_edge, length, N, K)
    for _ in range(6):
        K *= 2
        cur = _panel_transform(f_edge, length, N, K)
        scale = max(1.0, float(np.max(np.abs(cur))))
        if np.max(np.abs(cur - prev)) <= tol * scale:
            return cur
        prev = cur
    raise NumericalError("endpoint-graded quadrature did not converge")


def _quantile_edge(d: Distribution, length: float):
    def f(t_lo, t_hi):
        t_lo = np.asarray(t_lo, dtype=float)
        t_hi = np.asarray(t_hi, dtype=float)
        out = np.empty(np.broadcast(t_lo, t_hi).shape)
        lower = t_lo <= t_hi
        ulo = np.clip(t_lo[lower] / length, 1e-300, 1.0)
        uhi = np.clip(t_hi[~lower] / length, 1e-300, 1.0)
        with np.errstate(all="ignore"):
            out[lower] = d._quantile(ulo)
            out[~lower] = d._isf(uhi)
        return out

    return f


def _check_series_input(d: Distribution, N: int) -> None:
    if N < 1:
        raise ValidationError("truncation order N must be at least 1")
    require_nondegenerate(d)
    if not d.is_centered:
        raise ValidationError(
            f"law must be centered (|mean| <= {CENTER_TOL:g}); use center() first"
        )


def _moment_warning(d: Distribution) -> bool:
    if math.isfinite(d.width) or d.is_atomic:
        return False
    for p in (2.0, 1.5, 1.1):
        if math.isfinite(support_and_moments(d, p).p_moment):
            return False
    return True


def fourier_coeffs(
    d: Distribution,
    N: int = DEFAULT_N,
    M: int | None = None,
    mode: str = "auto",
) -> FourierSeries:
    """Fourier coefficients of the circle quantile of a centered law.

    ``mode`` is ``"split"`` (ramp removed, needs bounded support),
    ``"direct"`` or ``"auto"`` (split exactly when the support is bounded).
    Bounded laws use a midpoint-rule transform on ``M >= 8N`` points, step
    quantiles are integrated exactly, and unbounded laws use endpoint-graded
    Gauss-Legendre panels.
    """
    _check_series_input(d, N)
    if M is None:
        M = 8 * N
    if M < 8 * N:
        raise ValidationError("sample count M must be at least 8N")
    kappa = d.width
    if mode == "auto":
        mode = "split" if math.isfinite(kappa) else "direct"
    if mode not in ("split", "direct"):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == "split" and not math.isfinite(kappa):
        raise ValidationError("split mode needs a bounded support (finite jump)")

    warn = _moment_warning(d)
    meta = {"M": M, "method": ""}
    if d.is_atomic:
        c = _atomic_coeffs(d, N)
        a0 = 2.0 * d.mean
        if mode == "split":
            c = c - _ramp_coeffs(kappa, N)
        meta["method"] = "exact-step"
    elif math.isfinite(kappa):
        u = (np.arange(M) + 0.5) / M
        remainder = circle_quantile_grid(d, M) - kappa * (u - 0.5)
        c, a0 = _midpoint_transform(remainder, N)
        if mode == "direct":
            # exact ramp coefficients; the midpoint rule would alias the jump
            c = c + _ramp_coeffs(kappa, N)
        meta["method"] = "midpoint"
    elif warn:
        # no finite moment (formal use): plain midpoint rule, odd part only
        vals = circle_quantile_grid(d, M)
        c, a0 = _midpoint_transform(vals, N)
        if isinstance(d, Cauchy):
            c = 1j * c.imag
            a0 = 0.0
        meta["method"] = "midpoint-formal"
    else:
        full = _graded_coeffs(_quantile_edge(d, TWO_PI), TWO_PI, N) / math.pi
        c, a0 = full[1:], 2.0 * full[0].real
        meta["method"] = "graded-panels"
    return FourierSeries(
        c.real.copy(),
        -c.imag.copy(),
        a0=a0,
        kappa=kappa,
        split=(mode == "split"),
        moment_warning=warn,
        meta=meta,
    )


def gross_coeffs(d: Distribution, N: int = DEFAULT_N) -> FourierSeries:
    """Cosine coefficients of the even extension ``G(|theta| / pi)``."""
    _check_series_input(d, N)
    if not d.has_mean:
        raise ValidationError("the even-extension construction needs a finite mean")
    if d.is_atomic:
        c = _atomic_coeffs(d, N, length=math.pi)
        a = c.real
        method = "exact-step"
    else:
        full = _graded_coeffs(_quantile_edge(d, math.pi), math.pi, N)
        a = (2.0 / math.pi) * full[1:].real
        method = "graded-panels"
    return FourierSeries(
        a.copy(),
        np.zeros(N),
        a0=2.0 * d.mean,
        kappa=0.0,
        split=False,
        variant="gross",
        meta={"method": method},
    )


def series_sum(c: np.ndarray, theta, chunk: int = 256) -> np.ndarray:
    """``sum_{n=1}^N c_n e^{i n theta}`` for an array of angles."""
    shape = np.shape(theta)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    c = np.asarray(c, dtype=complex)
    n = np.arange(1, c.size + 1)
    out = np.empty(theta.size, dtype=complex)
    flat = theta.ravel()
    for s in range(0, flat.size, chunk):
        t = flat[s : s + chunk]
        out[s : s + chunk] = np.exp(1j * np.outer(t, n)) @ c
    return out.reshape(shape)


def ramp_conjugate(kappa: float, theta):
    """Conjugate of the ramp ``kappa*theta/(2pi) - kappa/2``: ``-(kappa/pi) ln(2 sin(theta/2))``.

    Returns ``+inf`` (the unbounded marker) where ``theta`` is a multiple of 2pi.
    """
    theta = np.remainder(np.asarray(theta, dtype=float), TWO_PI)
    s = np.abs(2.0 * np.sin(0.5 * theta))
    s = np.where(theta == 0.0, 0.0, s)
    with np.errstate(divide="ignore"):
        out = -(kappa / math.pi) * np.log(s)
    return np.where(s == 0.0, math.inf, out)


def conjugate_series(s: FourierSeries, theta):
    """Truncated conjugate series, plus the closed-form ramp part in split mode."""
    scalar = np.ndim(theta) == 0
    theta = np.asarray(theta, dtype=float)
    y = series_sum(s.c, theta).imag
    if s.split and s.kappa > 0:
        y = y + ramp_conjugate(s.kappa, theta)
    return float(y) if scalar else y


def quantile_conjugate(s: FourierSeries, u):
    """Hilbert transform of the 1-periodic quantile, ``H{G}(u) = H{phi}(2pi u)``."""
    return conjugate_series(s, TWO_PI * np.asarray(u, dtype=float))


def hilbert_pv(
    f: Callable[[float], float],
    theta: float,
    eta_min: float = 1e-8,
    points: Sequence[float] | None = None,
    rtol: float = 1e-6,
) -> float:
    """Principal-value quadrature of ``(1/2pi) int f(theta - t) cot(t/2) dt``.

    The symmetric pairs ``t, -t`` are folded together, which cancels the odd
    singularity of the kernel; the cut-off ``eta`` is then halved once to
    confirm the value has settled.
    """
    if not eta_min > 0:
        raise ValidationError("eta_min must be positive")

    def g(t):
        return (f(theta - t) - f(theta + t)) / math.tan(0.5 * t)

    brk = None
    if points:
        brk = sorted({abs(p) for p in points if eta_min < abs(p) < math.pi})

    def value(eta):
        pts = [p for p in (brk or []) if eta < p < math.pi] or None
        val, _ = integrate.quad(g, eta, math.pi, points=pts, limit=500, epsabs=1e-13, epsrel=1e-12)
        return val / TWO_PI

    coarse = value(2.0 * eta_min)
    fine = value(eta_min)
    if abs(fine - coarse) > rtol * max(1.0, abs(fine)):
        raise NumericalError("PV did not stabilize")
    return fine


def conjugate_quad(
    f: Callable[[np.ndarray], np.ndarray],
    theta: float,
    singular: Iterable[float] = (0.0,),
    tol: float = 1e-11,
) -> float:
    """Conjugate function by adaptive quadrature with the value at ``theta`` subtracted.

    ``(1/2pi) int_{-pi}^{pi} [f(theta - t) - f(theta)] cot(t/2) dt``; the
    integrand is regular at ``t = 0`` and has integrable singularities where
    ``theta - t`` hits a point of ``singular`` (angles on the circle).
    """
    f0 = float(f(np.array([theta]))[0])

    def g(t):
        s = math.fmod(theta - t, TWO_PI)
        if s <= 0.0:
            s += TWO_PI
        if t == 0.0:
            return 0.0
        return (float(f(np.array([s]))[0]) - f0) / math.tan(0.5 * t)

    pts = {0.0}
    for sp in singular:
        tt = math.remainder(theta - sp, TWO_PI)
        if -math.pi < tt < math.pi:
            pts.add(tt)
    pts = sorted(pts)
    edges = [-math.pi] + [p for p in pts if -math.pi < p < math.pi] + [math.pi]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        with warnings.catch_warnings():
            # far-tail panels hit roundoff before tol; the value is still sound
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(g, lo, hi, limit=400, epsabs=tol, epsrel=tol)
        total += val
    return total / TWO_PI


def write_series_csv(s: FourierSeries, path: str | Path) -> None:
    """CSV rows ``n,a_n,b_n`` under a ``kappa=.. split=.. a0=..`` header."""
    lines = [f"kappa={s.kappa!r} split={int(s.split)} a0={s.a0!r}"]
    lines += [f"{n},{a!r},{b!r}" for n, (a, b) in enumerate(zip(s.a.tolist(), s.b.tolist()), 1)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_series_csv(path: str | Path) -> FourierSeries:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValidationError(f"{path}: empty series file")
    head = dict(tok.split("=", 1) for tok in text[0].split())
    try:
        kappa = float(head["kappa"])
        split = head["split"] == "1"
        a0 = float(head["a0"])
    except (KeyError, ValueError):
        raise ValidationError(f"{path}: malformed series header {text[0]!r}")
    rows = [ln.split(",") for ln in text[1:] if ln.strip()]
    n = np.array([int(r[0]) for r in rows])
    if not np.array_equal(n, np.arange(1, n.size + 1)):
        raise ValidationError(f"{path}: orders must run 1..N without gaps")
    a = np.array([float(r[1]) for r in rows])
    b = np.array([float(r[2]) for r in rows])
    return FourierSeries(a, b, a0=a0, kappa=kappa, split=split)
