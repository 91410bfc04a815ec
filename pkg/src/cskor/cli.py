"""Command-line front end.

Subcommands ``build``, ``boundary``, ``verify``, ``rate``, ``consistency``
and ``report``. Exit status is 0 on success, 2 on invalid input and 3 on a
numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .boundary import build_curve, gamma, write_curve_csv
from .distributions import Distribution, center, parse_dist, require_nondegenerate
from .embedding import (
    AnalyticMap,
    build_map,
    eval_map,
    injectivity_check,
    map_csv_text,
    slit_tips,
)
from .errors import CskorError, NumericalError, ValidationError
from .fourier import DEFAULT_N
from .simulate import (
    DomainOracle,
    VerificationReport,
    VerifyConfig,
    consistency_report,
    dumps17,
    minimal_rate,
    run_verification,
)

__all__ = ["RunConfig", "PlotSpec", "render_svg", "load_config", "execute", "main"]

COMMANDS = ("build", "boundary", "verify", "rate", "consistency", "report")


@dataclass
class RunConfig:
    dist: str = ""
    N: int = DEFAULT_N
    M: int | None = None
    mode: str = "auto"
    variant: str = "delta_infinity"
    n_paths: int = 10_000
    dt_max: float = 1e-4
    seed: int | None = 0
    p_list: tuple[float, ...] = (1.0, 2.0)
    output_dir: str = "."
    plot: bool = False
    center: bool = False
    workers: int = 1

    def validate(self) -> "RunConfig":
        if not self.dist:
            raise ValidationError("no distribution given (use --dist or dist= in the config)")
        if self.N < 1:
            raise ValidationError("N must be at least 1")
        if self.M is not None and self.M < 8 * self.N:
            raise ValidationError("M must be at least 8N")
        if self.mode not in ("auto", "split", "direct"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.variant not in ("delta_infinity", "gross", "formal_cauchy"):
            raise ValidationError(f"unknown variant {self.variant!r}")
        if not 0 < self.dt_max <= 1e-3:
            raise ValidationError("dt_max must lie in (0, 1e-3]")
        if self.n_paths < 0:
            raise ValidationError("n_paths must be nonnegative")
        if self.n_paths > 0 and self.seed is None:
            raise ValidationError("a seed is required when paths are simulated")
        if any(not p > 0 for p in self.p_list):
            raise ValidationError("moment orders must be positive")
        return self


_CONFIG_TYPES = {
    "dist": str,
    "N": int,
    "M": int,
    "mode": str,
    "variant": str,
    "n_paths": int,
    "dt_max": float,
    "seed": int,
    "p_list": lambda s: tuple(float(v) for v in s.replace(",", " ").split()),
    "output_dir": str,
    "plot": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "center": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "workers": int,
}
_CONFIG_ALIASES = {"p": "p_list", "n": "N", "m": "M", "n-paths": "n_paths", "dt-max": "dt_max",
                   "output-dir": "output_dir"}


def load_config(path: str | Path) -> dict:
    """Read a flat ``key=value`` file (one key per line, ``#`` comments)."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _CONFIG_ALIASES.get(key, key)
        if key not in _CONFIG_TYPES:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_TYPES[key](value)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


# -- SVG ---------------------------------------------------------------------------------


@dataclass
class PlotSpec:
    x: np.ndarray
    y: np.ndarray
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    origin: bool = True
    caption: str = ""

    @classmethod
    def from_samples(cls, x, y, caption: str = "", x_range=None, y_range=None, pad: float = 0.05) -> "PlotSpec":
        """Clip samples to the given ranges and pad the ranges to contain them."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if x_range is not None:
            keep &= (x >= x_range[0]) & (x <= x_range[1])
        if y_range is not None:
            keep &= (y >= y_range[0]) & (y <= y_range[1])
        x, y = x[keep], y[keep]
        if x.size == 0:
            raise ValidationError("nothing to plot: no samples left after clipping")
        xs = np.append(x, 0.0)
        ys = np.append(y, 0.0)
        if x_range is None:
            w = max(float(np.ptp(xs)), 1e-12)
            x_range = (float(xs.min()) - pad * w, float(xs.max()) + pad * w)
        if y_range is None:
            h = max(float(np.ptp(ys)), 1e-12)
            y_range = (float(ys.min()) - pad * h, float(ys.max()) + pad * h)
        return cls(x, y, tuple(x_range), tuple(y_range), True, caption)


def render_svg(spec: PlotSpec, width: int = 640, height: int = 480, margin: int = 40) -> str:
    """Self-contained SVG 1.1: the curve as a polyline, a dot at the origin and a caption."""
    x = np.asarray(spec.x, dtype=float)
    y = np.asarray(spec.y, dtype=float)
    if x.size == 0:
        raise ValidationError("nothing to plot: empty samples")
    (x0, x1), (y0, y1) = spec.x_range, spec.y_range
    if not (x1 > x0 and y1 > y0):
        raise ValidationError("plot ranges must be nondegenerate")
    if x.min() < x0 or x.max() > x1 or y.min() < y0 or y.max() > y1:
        raise ValidationError("plot ranges must contain every sample")
    sx = (width - 2 * margin) / (x1 - x0)
    sy = (height - 2 * margin) / (y1 - y0)

    def px(v):
        return margin + (v - x0) * sx

    def py(v):
        return height - margin - (v - y0) * sy

    pts = " ".join(f"{px(a):.3f},{py(b):.3f}" for a, b in zip(x.tolist(), y.tolist()))
    parts = [
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" height="{height - 2 * margin}" '
        'fill="none" stroke="#888" stroke-width="1"/>',
    ]
    if x0 <= 0 <= x1:
        parts.append(f'<line x1="{px(0):.3f}" y1="{margin}" x2="{px(0):.3f}" y2="{height - margin}" '
                     'stroke="#ccc" stroke-width="1"/>')
    if y0 <= 0 <= y1:
        parts.append(f'<line x1="{margin}" y1="{py(0):.3f}" x2="{width - margin}" y2="{py(0):.3f}" '
                     'stroke="#ccc" stroke-width="1"/>')
    parts.append(f'<polyline id="curve" fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{pts}"/>')
    if spec.origin and x0 <= 0 <= x1 and y0 <= 0 <= y1:
        parts.append(f'<circle id="origin" cx="{px(0):.3f}" cy="{py(0):.3f}" r="3" fill="#c0392b"/>')
    parts.append(f'<text x="{margin}" y="{margin - 12}" font-family="sans-serif" font-size="13">'
                 f"{escape(spec.caption)}</text>")
    parts.append(f'<text x="{margin}" y="{height - 12}" font-family="sans-serif" font-size="11">'
                 f"x in [{x0:.4g}, {x1:.4g}], y in [{y0:.4g}, {y1:.4g}]</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- pipeline steps ---------------------------------------------------------------------------


def _law(cfg: RunConfig) -> Distribution:
    d = parse_dist(cfg.dist, base_dir=Path.cwd())
    require_nondegenerate(d)
    if cfg.center and d.has_mean and not d.is_centered:
        d = center(d)
    return d


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _build(cfg: RunConfig, d: Distribution) -> AnalyticMap:
    return build_map(d, cfg.N, variant=cfg.variant, mode=cfg.mode, M=cfg.M)


def cmd_build(cfg: RunConfig, d: Distribution, out: Path) -> list[Path]:
    m = _build(cfg, d)
    s = m.series
    quad = not d.is_atomic and not math.isfinite(d.width) and m.variant != "formal_cauchy"
    grid = 256 if quad else 4096
    inj = injectivity_check(m, grid)
    diag = {
        "law": repr(d),
        "variant": m.variant,
        "theorematic": m.theorematic,
        "N": m.N,
        "M": s.meta.get("M") if s is not None else None,
        "method": s.meta.get("method") if s is not None else None,
        "split": bool(m.log_weight > 0),
        "log_weight": m.log_weight,
        "kappa": d.width,
        "moment_warning": bool(s.moment_warning) if s is not None else False,
        "catalog": m.catalog,
        "value_at_origin": [eval_map(m, 0.0).real, eval_map(m, 0.0).imag],
        "injectivity": dict(inj.to_dict(), grid=grid),
    }
    if not m.theorematic:
        diag["note"] = "formal construction outside the moment hypotheses; not covered by the theory"
    if d.is_atomic:
        diag["slit_tips"] = [list(t) for t in slit_tips(d, max(cfg.N, 1 << 14))]
    return [_write(out / "map.csv", map_csv_text(m)), _write(out / "diagnostic.json", dumps17(diag))]


def cmd_boundary(cfg: RunConfig, d: Distribution, out: Path) -> list[Path]:
    m = _build(cfg, d)
    if d.is_atomic:
        tips = slit_tips(d, max(cfg.N, 1 << 14))
        rows = ["x,y_tip"] + [f"{a:.17g},{b:.17g}" for a, b in tips]
        walls = {"walls": [d.alpha, d.beta], "slit_tips": [list(t) for t in tips]}
        return [_write(out / "slits.csv", "\n".join(rows) + "\n"), _write(out / "boundary.json", dumps17(walls))]
    c = build_curve(m)
    path = out / "boundary.csv"
    write_curve_csv(c, path)
    files = [path, _write(out / "boundary.json", dumps17(c.metadata()))]
    if cfg.plot:
        files.append(_write(out / "plot.svg", render_svg(_plot_spec(c, d))))
    return files


def _plot_spec(c, d: Distribution) -> PlotSpec:
    lo = max(d.quantile(0.005), c.x_range[0])
    hi = min(d.isf(0.005), c.x_range[1])
    x = np.linspace(lo, hi, 801)
    y = gamma(c, x)
    if c.symmetric:
        x = np.concatenate((x, x[::-1]))
        y = np.concatenate((y, -y[::-1]))
    tag = c.closed_form or "boundary"
    return PlotSpec.from_samples(x, y, caption=f"{tag}: lower boundary of the domain, origin marked")


def _oracle(cfg: RunConfig, d: Distribution, m: AnalyticMap) -> tuple[DomainOracle, dict]:
    if d.is_atomic:
        return DomainOracle.from_atomic(d, max(cfg.N, 1 << 14)), {}
    if m.variant == "formal_cauchy":
        # heavy-tailed exit times: let steps grow far from the line, cap the work per path
        return DomainOracle.halfplane(-d.scale), {"far_field": 1.0, "max_steps": 10**6, "allow_runaway": True}
    return DomainOracle.from_curve(build_curve(m)), {}


def _simulate(cfg: RunConfig, d: Distribution) -> VerificationReport:
    if cfg.n_paths < 1:
        raise ValidationError("n_paths must be at least 1 for simulation")
    m = _build(cfg, d)
    oracle, extra = _oracle(cfg, d, m)
    vcfg = VerifyConfig(seed=cfg.seed, dt_max=cfg.dt_max, p_list=tuple(cfg.p_list), workers=cfg.workers, **extra)
    return run_verification(d, oracle, cfg.n_paths, vcfg, theorematic=m.theorematic)


def _rate_dict(rep: VerificationReport, d: Distribution) -> dict:
    out = {
        "formula_rate": minimal_rate(d.support),
        "rate_fit": None if rep.rate_fit is None else rep.rate_fit.to_dict(),
        "n_paths": rep.n_paths,
        "seed": rep.seed,
        "dt_max": rep.dt_max,
        "domain": rep.domain,
    }
    if rep.rate_fit is None:
        out["note"] = "no exponential regime detected"
    return out


def cmd_verify(cfg, d, out, rep=None) -> list[Path]:
    rep = rep or _simulate(cfg, d)
    rep.write_survival_csv(out / "survival.csv")
    return [_write(out / "verify.json", rep.to_json()), out / "survival.csv"]


def cmd_rate(cfg, d, out, rep=None) -> list[Path]:
    rep = rep or _simulate(cfg, d)
    return [_write(out / "rate.json", dumps17(_rate_dict(rep, d)))]


def cmd_consistency(cfg, d, out) -> list[Path]:
    m = _build(cfg, d)
    n = cfg.n_paths if cfg.n_paths > 0 else 10_000
    return [_write(out / "consistency.json", dumps17(consistency_report(m, n, cfg.seed or 0)))]


def cmd_report(cfg, d, out) -> list[Path]:
    files = cmd_build(cfg, d, out)
    files += cmd_boundary(replace(cfg, plot=True), d, out)
    files += cmd_consistency(cfg, d, out)
    if cfg.n_paths > 0:
        rep = _simulate(cfg, d)
        files += cmd_verify(cfg, d, out, rep)
        files += cmd_rate(cfg, d, out, rep)
    return files


_HANDLERS = {
    "build": cmd_build,
    "boundary": cmd_boundary,
    "verify": cmd_verify,
    "rate": cmd_rate,
    "consistency": cmd_consistency,
    "report": cmd_report,
}


# -- argument handling -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cskor", description="Build Brownian-exit embedding domains and verify them by simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--dist", help='law spec, e.g. "kind=uniform a=-1 b=1"')
        s.add_argument("--config", help="key=value config file; flags override it")
        s.add_argument("--N", type=int, dest="N")
        s.add_argument("--M", type=int, dest="M")
        s.add_argument("--mode", choices=("auto", "split", "direct"))
        s.add_argument("--variant", choices=("delta_infinity", "gross", "formal_cauchy"))
        s.add_argument("--n-paths", type=int, dest="n_paths")
        s.add_argument("--dt-max", type=float, dest="dt_max")
        s.add_argument("--seed", type=int)
        s.add_argument("--p", type=float, nargs="+", dest="p_list")
        s.add_argument("--output-dir", dest="output_dir")
        s.add_argument("--workers", type=int)
        s.add_argument("--plot", action="store_true", default=None)
        s.add_argument("--center", action="store_true", default=None,
                       help="shift the law to mean zero before building")
    return p


def config_from_args(argv: Sequence[str]) -> tuple[str, RunConfig]:
    args = _parser().parse_args(list(argv))
    values = {}
    env_dir = os.environ.get("CSKOR_OUTPUT_DIR")
    if env_dir:
        values["output_dir"] = env_dir
    if args.config:
        values.update(load_config(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = tuple(v) if f.name == "p_list" else v
    return args.command, RunConfig(**values).validate()


def execute(argv: Sequence[str], stdout=None, stderr=None) -> int:
    """Run one subcommand; return the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        command, cfg = config_from_args(argv)
        d = _law(cfg)
        files = _HANDLERS[command](cfg, d, _out(cfg))
    except ValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return 3
    except CskorError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    for path in files:
        print(path, file=stdout)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    return execute(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
