"""Brownian exit simulation in constructed domains and the statistics built on it.

Paths are Euler steps of planar Brownian motion with an adaptive step
``dt = clip(c_step * dist^2, dt_min, dt_max)`` keyed to an estimate of the
distance to the boundary. A step that lands outside is resolved by bisection
along the step segment, with time interpolated linearly.

Every path owns a splitmix64 stream seeded from ``(seed, path index)``, so a
batch gives identical results however it is chunked or threaded.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np
from scipy import special

from .boundary import BAND, BoundaryCurve
from .distributions import Atomic, Distribution, require_nondegenerate
from .embedding import AnalyticMap, boundary_x, slit_tips
from .errors import NumericalError, RunawayPathError, ValidationError
from .fourier import TWO_PI

__all__ = [
    "DomainOracle",
    "ExitRecord",
    "ExitBatch",
    "VerifyConfig",
    "VerificationReport",
    "RateFit",
    "simulate_exit",
    "simulate_batch",
    "ks_test",
    "survival_curve",
    "estimate_rate",
    "minimal_rate",
    "run_verification",
    "consistency_sample",
    "consistency_report",
    "dumps17",
]

GRAPH, STRIP, HALFPLANE, SLOT = 0, 1, 2, 3
INSIDE, BAND_HIT, OUTSIDE = 1, 0, -1
OK, RUNAWAY, BAD_START = 0, 1, 2

# parameter slots shared by all oracle kinds
P_XLO, P_XHI, P_BAND, P_SYM, P_YLINE, P_HALF, P_B0, P_BINV = range(8)


# -- numba kernels ---------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_TO_UNIT = 1.0 / 9007199254740992.0


@numba.njit(cache=True, error_model="numpy")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True, error_model="numpy")
def _stream_start(seed, path):
    return _mix64(_mix64(np.uint64(seed)) + np.uint64(path) * _GOLDEN)


@numba.njit(cache=True, error_model="numpy")
def _next_unit(state):
    # uniform on (0, 1]
    state = state + _GOLDEN
    z = _mix64(state)
    return state, (float(z >> _S11) + 1.0) * _TO_UNIT


@numba.njit(cache=True, error_model="numpy")
def _graph_eval(params, knots, coefs, bucket, x):
    b = int((x - params[P_B0]) * params[P_BINV])
    if b < 0:
        b = 0
    if b >= bucket.size:
        b = bucket.size - 1
    i = bucket[b]
    last = knots.size - 2
    while i < last and knots[i + 1] <= x:
        i += 1
    t = x - knots[i]
    g = ((coefs[0, i] * t + coefs[1, i]) * t + coefs[2, i]) * t + coefs[3, i]
    gp = (3.0 * coefs[0, i] * t + 2.0 * coefs[1, i]) * t + coefs[2, i]
    return g, gp


@numba.njit(cache=True, error_model="numpy")
def _verdict(gap, dist, band):
    if gap > band:
        return INSIDE, dist
    if gap >= -band:
        return BAND_HIT, 0.0
    return OUTSIDE, 0.0


@numba.njit(cache=True, error_model="numpy")
def _probe_graph(params, knots, coefs, bucket, slit_x, slit_y, x, y):
    xlo = params[P_XLO]
    xhi = params[P_XHI]
    if x <= xlo or x >= xhi:
        return OUTSIDE, 0.0
    g, gp = _graph_eval(params, knots, coefs, bucket, x)
    gap = y - g
    if params[P_SYM] > 0.0:
        gap = min(gap, -g - y)
    return _verdict(gap, min(gap / math.sqrt(1.0 + gp * gp), x - xlo, xhi - x), params[P_BAND])


@numba.njit(cache=True, error_model="numpy")
def _probe_strip(params, knots, coefs, bucket, slit_x, slit_y, x, y):
    band = params[P_BAND]
    gap = min(x - params[P_XLO], params[P_XHI] - x)
    for k in range(slit_x.size):
        dx = abs(x - slit_x[k])
        if y <= slit_y[k]:
            dk = dx - band
        else:
            dk = math.sqrt(dx * dx + (y - slit_y[k]) ** 2) - band
        if dk < gap:
            gap = dk
    return _verdict(gap, gap, band)


@numba.njit(cache=True, error_model="numpy")
def _probe_halfplane(params, knots, coefs, bucket, slit_x, slit_y, x, y):
    gap = y - params[P_YLINE]
    return _verdict(gap, gap, params[P_BAND])


@numba.njit(cache=True, error_model="numpy")
def _probe_slot(params, knots, coefs, bucket, slit_x, slit_y, x, y):
    # complement of the half-strip {|x| <= half, y <= top}
    ax = abs(x) - params[P_HALF]
    dy = y - params[P_YLINE]
    if dy <= 0.0:
        gap = ax
    elif ax <= 0.0:
        gap = dy
    else:
        gap = math.sqrt(ax * ax + dy * dy)
    return _verdict(gap, gap, params[P_BAND])


_PROBES = {GRAPH: _probe_graph, STRIP: _probe_strip, HALFPLANE: _probe_halfplane, SLOT: _probe_slot}


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _run_paths(probe, params, knots, coefs, bucket, slit_x, slit_y, seed, first, x0, y0,
               dt_max, dt_min, c_step, far, max_steps, out_x, out_y, out_tau, out_steps, out_status):
    n = out_x.size
    for p in range(n):
        state = _stream_start(seed, first + p)
        x = x0
        y = y0
        t = 0.0
        steps = 0
        status, dist = probe(params, knots, coefs, bucket, slit_x, slit_y, x, y)
        if status != INSIDE:
            out_status[p] = BAD_START
            out_x[p] = x
            out_y[p] = y
            out_tau[p] = 0.0
            out_steps[p] = 0
            continue
        out_status[p] = RUNAWAY
        while steps < max_steps:
            dt = c_step * dist * dist
            if not (far > 0.0 and dist > far) and dt > dt_max:
                dt = dt_max
            if dt < dt_min:
                dt = dt_min
            # Marsaglia polar method: two normals without trigonometry
            while True:
                state, u1 = _next_unit(state)
                state, u2 = _next_unit(state)
                v1 = 2.0 * u1 - 1.0
                v2 = 2.0 * u2 - 1.0
                q = v1 * v1 + v2 * v2
                if 0.0 < q < 1.0:
                    break
            r = math.sqrt(-2.0 * dt * math.log(q) / q)
            dx = r * v1
            dy = r * v2
            steps += 1
            s, dn = probe(params, knots, coefs, bucket, slit_x, slit_y, x + dx, y + dy)
            if s == INSIDE:
                x += dx
                y += dy
                t += dt
                dist = dn
                continue
            lo = 0.0
            hi = 1.0
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                s, _d = probe(params, knots, coefs, bucket, slit_x, slit_y, x + mid * dx, y + mid * dy)
                if s == INSIDE:
                    lo = mid
                else:
                    hi = mid
            x += hi * dx
            y += hi * dy
            t += hi * dt
            out_status[p] = OK
            break
        out_x[p] = x
        out_y[p] = y
        out_tau[p] = t
        out_steps[p] = steps


# -- domain oracles ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DomainOracle:
    """Membership and distance oracle for a simulated domain.

    Build with one of the constructors: :meth:`from_curve`, :meth:`strip`,
    :meth:`from_atomic`, :meth:`halfplane` or :meth:`slot_complement`.
    """

    kind: int
    params: np.ndarray
    knots: np.ndarray = field(default_factory=lambda: np.zeros(2))
    coefs: np.ndarray = field(default_factory=lambda: np.zeros((4, 1)))
    bucket: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int32))
    slit_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    slit_y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""
    atoms: np.ndarray | None = None

    @staticmethod
    def _params(**kw) -> np.ndarray:
        p = np.zeros(8)
        p[P_BAND] = kw.pop("band", BAND)
        for k, v in kw.items():
            p[globals()["P_" + k.upper()]] = v
        return p

    @classmethod
    def from_curve(cls, c: BoundaryCurve, band: float = BAND) -> "DomainOracle":
        """Domain above ``gamma`` (and below ``-gamma`` for the symmetric variant)."""
        knots = np.ascontiguousarray(c.interpolant.x, dtype=float)
        coefs = np.ascontiguousarray(c.interpolant.c, dtype=float)
        nb = 2 * knots.size
        lo, hi = knots[0], knots[-1]
        edges = lo + (hi - lo) * np.arange(nb) / nb
        bucket = np.clip(np.searchsorted(knots, edges, side="right") - 1, 0, knots.size - 2).astype(np.int32)
        params = cls._params(band=band, xlo=lo, xhi=hi, sym=float(c.symmetric), b0=lo, binv=nb / (hi - lo))
        tag = c.closed_form or "curve"
        return cls(GRAPH, params, knots, coefs, bucket, label=f"graph:{tag}")

    @classmethod
    def strip(cls, alpha: float, beta: float, slits: Sequence[tuple[float, float]] = (), band: float = BAND,
              atoms: np.ndarray | None = None) -> "DomainOracle":
        """Vertical strip ``alpha < x < beta`` minus slits ``{x_k} x (-inf, y_k]``."""
        if not alpha < beta:
            raise ValidationError("strip needs alpha < beta")
        sx = np.array([s[0] for s in slits], dtype=float)
        sy = np.array([s[1] for s in slits], dtype=float)
        params = cls._params(band=band, xlo=alpha, xhi=beta)
        return cls(STRIP, params, slit_x=sx, slit_y=sy, label=f"strip:{len(sx)} slits", atoms=atoms)

    @classmethod
    def from_atomic(cls, d: Atomic, N: int = 1 << 14, band: float = BAND) -> "DomainOracle":
        require_nondegenerate(d)
        return cls.strip(d.alpha, d.beta, slit_tips(d, N), band=band, atoms=d.locations)

    @classmethod
    def halfplane(cls, y0: float = -1.0, band: float = BAND) -> "DomainOracle":
        return cls(HALFPLANE, cls._params(band=band, yline=y0), label="halfplane")

    @classmethod
    def slot_complement(cls, half_width: float = 1.0, top: float = -1.0, band: float = BAND) -> "DomainOracle":
        """Plane minus the half-strip ``{|x| <= half_width, y <= top}``."""
        return cls(SLOT, cls._params(band=band, half=half_width, yline=top), label="slot-complement")

    def probe(self, x: float, y: float) -> tuple[int, float]:
        s, d = _PROBES[self.kind](self.params, self.knots, self.coefs, self.bucket, self.slit_x, self.slit_y,
                                  float(x), float(y))
        return int(s), float(d)

    def classify(self, x: float, y: float) -> str:
        return {INSIDE: "inside", BAND_HIT: "boundary-band", OUTSIDE: "outside"}[self.probe(x, y)[0]]


# -- simulation -------------------------------------------------------------------------------


@dataclass(frozen=True)
class ExitRecord:
    exit_point: tuple[float, float]
    tau: float
    steps: int
    path_seed: int


@dataclass(frozen=True, eq=False)
class ExitBatch:
    x: np.ndarray
    y: np.ndarray
    tau: np.ndarray
    steps: np.ndarray
    status: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def n_runaway(self) -> int:
        return int(np.count_nonzero(self.status == RUNAWAY))

    def finished(self) -> "ExitBatch":
        keep = self.status == OK
        return ExitBatch(self.x[keep], self.y[keep], self.tau[keep], self.steps[keep], self.status[keep],
                         self.seed)

    def record(self, i: int) -> ExitRecord:
        return ExitRecord((float(self.x[i]), float(self.y[i])), float(self.tau[i]), int(self.steps[i]), i)

    def write_csv(self, path: str | Path) -> None:
        rows = ["path,x,y,tau,steps,status"]
        rows += [
            f"{i},{a:.17g},{b:.17g},{t:.17g},{s},{st}"
            for i, (a, b, t, s, st) in enumerate(
                zip(self.x.tolist(), self.y.tolist(), self.tau.tolist(), self.steps.tolist(), self.status.tolist())
            )
        ]
        Path(path).write_text("\n".join(rows) + "\n")


def _check_step_args(dt_max: float, dt_min: float, c_step: float) -> None:
    if not 0 < dt_max <= 1e-3:
        raise ValidationError("dt_max must lie in (0, 1e-3]")
    if not 0 < dt_min <= dt_max:
        raise ValidationError("dt_min must lie in (0, dt_max]")
    if not c_step > 0:
        raise ValidationError("c_step must be positive")


def simulate_batch(
    oracle: DomainOracle,
    n_paths: int,
    seed: int = 0,
    dt_max: float = 1e-4,
    start: tuple[float, float] = (0.0, 0.0),
    c_step: float = 0.1,
    dt_min: float = 1e-8,
    far_field: float | None = None,
    max_steps: int = 10**9,
    first_path: int = 0,
    workers: int = 1,
    allow_runaway: bool = False,
) -> ExitBatch:
    """Simulate paths ``first_path .. first_path + n_paths - 1`` of stream ``seed``.

    ``far_field`` lifts the ``dt_max`` cap when the distance estimate
    exceeds it, so steps keep pace with paths that wander far away in
    unbounded domains.
    """
    if n_paths < 1:
        raise ValidationError("n_paths must be at least 1")
    if seed < 0 or first_path < 0:
        raise ValidationError("seed and path indices must be nonnegative")
    _check_step_args(dt_max, dt_min, c_step)
    out_x = np.empty(n_paths)
    out_y = np.empty(n_paths)
    out_tau = np.empty(n_paths)
    out_steps = np.empty(n_paths, dtype=np.int64)
    out_status = np.empty(n_paths, dtype=np.int64)
    o = oracle
    far = -1.0 if far_field is None else float(far_field)

    def run(lo: int, hi: int) -> None:
        _run_paths(_PROBES[o.kind], o.params, o.knots, o.coefs, o.bucket, o.slit_x, o.slit_y, seed, first_path + lo,
                   float(start[0]), float(start[1]), dt_max, dt_min, c_step, far, int(max_steps),
                   out_x[lo:hi], out_y[lo:hi], out_tau[lo:hi], out_steps[lo:hi], out_status[lo:hi])

    chunks = [(lo, min(lo + 4096, n_paths)) for lo in range(0, n_paths, 4096)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda c: run(*c), chunks))
    else:
        for c in chunks:
            run(*c)
    if np.any(out_status == BAD_START):
        raise ValidationError("start point is not inside the domain")
    batch = ExitBatch(out_x, out_y, out_tau, out_steps, out_status, seed)
    if batch.n_runaway and not allow_runaway:
        raise RunawayPathError(f"runaway path: {batch.n_runaway} paths exceeded {max_steps} steps")
    return batch


def simulate_exit(
    oracle: DomainOracle,
    start: tuple[float, float] = (0.0, 0.0),
    dt_max: float = 1e-4,
    seed: int = 0,
    path_index: int = 0,
    **kw,
) -> ExitRecord:
    """One exit path; ``(seed, path_index)`` names its random stream."""
    batch = simulate_batch(oracle, 1, seed=seed, dt_max=dt_max, start=start, first_path=path_index, **kw)
    rec = batch.record(0)
    return ExitRecord(rec.exit_point, rec.tau, rec.steps, path_index)


# -- statistics ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KSResult:
    stat: float
    p_value: float

    def __iter__(self):
        return iter((self.stat, self.p_value))


def ks_test(samples, cdf) -> KSResult:
    """One-sample Kolmogorov-Smirnov statistic with its asymptotic p-value.

    The p-value is ``nan`` below 8 samples, where the asymptotic law is
    not trustworthy.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValidationError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    stat = min(max(stat, 0.0), 1.0)
    p = float(special.kolmogorov(math.sqrt(n) * stat)) if n >= 8 else math.nan
    return KSResult(stat, p)


def _ks_discrete(values: np.ndarray, d: Atomic) -> KSResult:
    # exit positions snapped to atoms; compare cumulative masses at the atoms
    pts = d.locations
    idx = np.argmin(np.abs(values[:, None] - pts[None, :]), axis=1)
    freq = np.bincount(idx, minlength=pts.size) / values.size
    stat = float(np.max(np.abs(np.cumsum(freq) - d.cumulative)))
    p = float(special.kolmogorov(math.sqrt(values.size) * stat)) if values.size >= 8 else math.nan
    return KSResult(stat, p)


def survival_curve(tau, n_grid: int = 256, t_min: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Empirical ``P(tau > t)`` on a log-spaced grid up to the largest exit time."""
    tau = np.sort(np.asarray(tau, dtype=float))
    if tau.size == 0:
        raise ValidationError("empty sample")
    lo = t_min if t_min is not None else max(float(tau[0]), 1e-6)
    hi = float(tau[-1])
    t = np.geomspace(lo, hi, n_grid) if hi > lo else np.array([lo])
    surv = 1.0 - np.searchsorted(tau, t, side="right") / tau.size
    return t, surv


@dataclass(frozen=True)
class RateFit:
    rate: float
    window: tuple[float, float]
    r2: float
    n_points: int

    def to_dict(self) -> dict:
        return {"rate": self.rate, "window": list(self.window), "r2": self.r2, "n_points": self.n_points}


def estimate_rate(
    t, surv, window: tuple[float, float] = (0.01, 0.2), min_points: int = 5, min_r2: float = 0.95
) -> RateFit:
    """Slope of ``-ln P(tau > t)`` against ``t`` where ``P`` lies in ``window``.

    A fit with ``R^2`` below ``min_r2`` is rejected: heavy-tailed exit
    times bend the log-survival curve and have no exponential regime.
    """
    t = np.asarray(t, dtype=float)
    surv = np.asarray(surv, dtype=float)
    if t.shape != surv.shape or t.ndim != 1:
        raise ValidationError("t and survival arrays must match")
    if np.any(np.diff(surv) > 0):
        raise ValidationError("survival curve must be nonincreasing")
    sel = (surv >= window[0]) & (surv <= window[1])
    if np.count_nonzero(sel) < min_points:
        raise NumericalError("no exponential regime detected")
    tt, yy = t[sel], -np.log(surv[sel])
    slope, icpt = np.polyfit(tt, yy, 1)
    resid = yy - (slope * tt + icpt)
    ss = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    if slope < 0 or r2 < min_r2:
        raise NumericalError("no exponential regime detected")
    return RateFit(float(slope), (float(tt[0]), float(tt[-1])), r2, int(tt.size))


def minimal_rate(support: tuple[float, float]) -> float:
    """``pi^2 / (2 (beta - alpha)^2)``: the smallest rate over domains for the law."""
    a, b = support
    if not a < b:
        raise ValidationError("support needs alpha < beta")
    w = b - a
    return math.pi**2 / (2.0 * w * w) if math.isfinite(w) else 0.0


# -- reports --------------------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        text = format(obj, ".17g")
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps17(obj, indent: int = 2) -> str:
    """Deterministic JSON with floats at 17 significant digits and sorted keys."""
    return _encode(_plain(obj), indent, 0) + "\n"


@dataclass
class VerifyConfig:
    seed: int = 0
    dt_max: float = 1e-4
    dt_min: float = 1e-8
    c_step: float = 0.1
    p_list: tuple[float, ...] = (1.0, 2.0)
    start: tuple[float, float] = (0.0, 0.0)
    far_field: float | None = None
    max_steps: int = 10**9
    workers: int = 1
    allow_runaway: bool = False
    window: tuple[float, float] = (0.01, 0.2)
    n_grid: int = 256


@dataclass
class VerificationReport:
    n_paths: int
    ks_stat: float
    ks_p_value: float
    moment_estimates: dict
    rate_fit: RateFit | None
    formula_rate: float
    seed: int
    dt_max: float
    mode: str = "domain"
    theorematic: bool = True
    domain: str = ""
    extras: dict = field(default_factory=dict)
    survival: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    batch: ExitBatch | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "domain": self.domain,
            "theorematic": self.theorematic,
            "n_paths": self.n_paths,
            "ks_stat": self.ks_stat,
            "ks_p_value": self.ks_p_value,
            "moment_estimates": {format(p, "g"): v for p, v in self.moment_estimates.items()},
            "moment_convention": "E[tau^(p/2)]",
            "rate_fit": None if self.rate_fit is None else self.rate_fit.to_dict(),
            "formula_rate": self.formula_rate,
            "seed": self.seed,
            "dt_max": self.dt_max,
        }
        out.update(self.extras)
        return out

    def to_json(self) -> str:
        return dumps17(self.to_dict())

    def write_survival_csv(self, path: str | Path) -> None:
        if self.survival is None:
            raise ValidationError("report carries no survival curve")
        t, s = self.survival
        rows = ["t,survival"] + [f"{a:.17g},{b:.17g}" for a, b in zip(t.tolist(), s.tolist())]
        Path(path).write_text("\n".join(rows) + "\n")


def run_verification(
    d: Distribution,
    domain: BoundaryCurve | DomainOracle,
    n_paths: int,
    cfg: VerifyConfig | None = None,
    theorematic: bool = True,
) -> VerificationReport:
    """Simulate exits from the domain and test them against the law ``d``.

    Reports the KS test of ``Re(exit)`` against ``d``, moments
    ``E[tau^(p/2)]``, the survival curve and its exponential rate, and
    the minimal rate for the support of ``d``.
    """
    require_nondegenerate(d)
    cfg = cfg or VerifyConfig()
    oracle = domain if isinstance(domain, DomainOracle) else DomainOracle.from_curve(domain)
    batch = simulate_batch(
        oracle, n_paths, seed=cfg.seed, dt_max=cfg.dt_max, start=cfg.start, c_step=cfg.c_step,
        dt_min=cfg.dt_min, far_field=cfg.far_field, max_steps=cfg.max_steps, workers=cfg.workers,
        allow_runaway=cfg.allow_runaway,
    )
    done = batch.finished()
    extras = {"n_runaway": batch.n_runaway, "mean_exit_x": float(np.mean(done.x)), "mean_steps": float(np.mean(done.steps))}
    if isinstance(d, Atomic):
        ks = _ks_discrete(done.x, d)
        idx = np.argmin(np.abs(done.x[:, None] - d.locations[None, :]), axis=1)
        extras["atom_frequencies"] = (np.bincount(idx, minlength=d.locations.size) / done.n).tolist()
    else:
        ks = ks_test(done.x, d.cdf)
    moments = {float(p): float(np.mean(done.tau ** (0.5 * p))) for p in cfg.p_list}
    t, surv = survival_curve(done.tau, cfg.n_grid)
    try:
        fit = estimate_rate(t, surv, cfg.window)
    except NumericalError:
        fit = None
        extras["rate_note"] = "no exponential regime detected"
    return VerificationReport(
        n_paths=n_paths,
        ks_stat=ks.stat,
        ks_p_value=ks.p_value,
        moment_estimates=moments,
        rate_fit=fit,
        formula_rate=minimal_rate(d.support),
        seed=cfg.seed,
        dt_max=cfg.dt_max,
        theorematic=theorematic,
        domain=oracle.label,
        extras=extras,
        survival=(t, surv),
        batch=batch,
    )


def consistency_sample(m: AnalyticMap, n: int, seed: int = 0) -> np.ndarray:
    """Circle quantile at uniform random angles; its law should be the source law."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if m.source is None:
        raise ValidationError("consistency sampling needs the map's generating law")
    rng = np.random.Generator(np.random.Philox(seed))
    theta = rng.uniform(0.0, TWO_PI, n)
    theta = np.clip(theta, 1e-300, np.nextafter(TWO_PI, 0.0))
    return np.asarray(boundary_x(m, theta), dtype=float)


def consistency_report(m: AnalyticMap, n: int, seed: int = 0) -> dict:
    vals = consistency_sample(m, n, seed)
    d = m.source
    ks = _ks_discrete(vals, d) if isinstance(d, Atomic) else ks_test(vals, d.cdf)
    return {
        "mode": "consistency",
        "variant": m.variant,
        "theorematic": m.theorematic,
        "n": n,
        "seed": seed,
        "ks_stat": ks.stat,
        "ks_p_value": ks.p_value,
        "sample_mean": float(np.mean(vals)),
    }
