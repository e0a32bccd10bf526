"""Command line entry point: validate, spectrum, dynamics and compare."""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config_text, parse_config, preset_names
from .effective import spectrum_grid
from .errors import ConfigError, ThreeLevelError
from .model import derive_params, has_errors, validate
from .observables import time_series
from . import oracle

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3
SUBCOMMANDS = ("validate", "spectrum", "dynamics", "compare")


def fmt(x) -> str:
    return f"{float(x):.16e}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path) -> dict[str, np.ndarray]:
    """Columns of an emitted CSV as float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def svg_plot(tau, series: dict, title: str, y_range=None) -> str:
    """Axes plus one polyline per series; no external renderer."""
    width, height, pad = 640, 400, 50
    tau = np.asarray(tau, dtype=float)
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.array([])
    lo, hi = y_range if y_range else (
        (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0))
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    t0, t1 = float(tau[0]), float(tau[-1])
    span = (t1 - t0) or 1.0

    def px(t, y):
        x = pad + (t - t0) / span * (width - 2 * pad)
        v = height - pad - (y - lo) / (hi - lo) * (height - 2 * pad)
        return f"{x:.2f},{v:.2f}"

    colours = ("#1f77b4", "#d62728", "#2ca02c")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{pad / 2:.0f}" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle">tau</text>',
        f'<text x="{pad - 5}" y="{height - pad}" text-anchor="end">{lo:.3g}</text>',
        f'<text x="{pad - 5}" y="{pad}" text-anchor="end">{hi:.3g}</text>',
        f'<text x="{pad}" y="{height - pad + 15}" text-anchor="middle">{t0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" text-anchor="middle">{t1:.3g}</text>',
    ]
    for k, (name, y) in enumerate(zip(series, ys)):
        pts = " ".join(px(t, v) for t, v in zip(tau, y) if np.isfinite(v))
        colour = colours[k % len(colours)]
        out.append(f'<polyline fill="none" stroke="{colour}" points="{pts}"/>')
        out.append(f'<text x="{width - pad}" y="{pad + 15 * (k + 1)}" fill="{colour}" '
                   f'text-anchor="end">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _derived(cfg: RunConfig):
    return derive_params(cfg.params, cfg.atom, rwa=cfg.rwa)


def run_spectrum(cfg: RunConfig, out: Path) -> None:
    grid = spectrum_grid(cfg.atom, cfg.params, _derived(cfg))
    rows = []
    for n1 in range(grid.shape[0]):
        for n2 in range(grid.shape[1]):
            mu = grid.mu[n1, n2]
            rows.append([n1, n2, *map(fmt, mu), fmt(grid.f1[n1, n2]), fmt(grid.f2[n1, n2])])
    write_csv(out / "spectrum.csv", ["n1", "n2", "mu1", "mu2", "mu3", "f1", "f2"], rows)


def run_dynamics(cfg: RunConfig, out: Path, svg: bool) -> None:
    tau = np.linspace(cfg.tau_start, cfg.tau_end, cfg.tau_steps)
    ts = time_series(cfg.atom, cfg.params, _derived(cfg), tau)
    rows = [list(map(fmt, r)) for r in zip(ts.tau, ts.w, ts.q_a, ts.q_b, ts.norm)]
    write_csv(out / "series.csv", ["tau", "w", "q_a", "q_b", "norm"], rows)
    if svg:
        (out / "w.svg").write_text(svg_plot(ts.tau, {"W": ts.w}, "population inversion", (-1.0, 1.0)))
        (out / "q.svg").write_text(svg_plot(ts.tau, {"Q_a": ts.q_a, "Q_b": ts.q_b}, "Mandel Q"))


def run_compare(cfg: RunConfig, out: Path) -> float:
    """Analytic block spectra against the exact spectrum at the oracle truncation."""
    n = cfg.oracle_n_max
    p = replace(cfg.params, n_max1=n, n_max2=n)
    d = _derived(cfg)
    grid = spectrum_grid(cfg.atom, p, d)
    basis = oracle.FockBasis(n, n)
    h = oracle.build_full_hamiltonian(cfg.atom, p, include_crt=not cfg.rwa, basis=basis)
    report = oracle.match_spectra(cfg.atom, grid, oracle.eigendecompose(h), d, basis)
    rows = [[r.n1, r.n2, r.branch + 1, fmt(r.analytic), fmt(r.exact), fmt(r.abs_gap), fmt(r.rel_gap)]
            for r in report.rows]
    write_csv(out / "compare.csv",
              ["n1", "n2", "branch", "mu_analytic", "mu_exact", "abs_gap", "rel_gap"], rows)
    return report.max_rel_gap


def run(subcommand: str, cfg: RunConfig, svg: bool | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    diags = validate(cfg.params, cfg.atom, rwa=cfg.rwa)
    for dg in diags:
        print(dg, file=stdout if subcommand == "validate" else sys.stderr)
    if has_errors(diags):
        return EXIT_INVALID
    if subcommand == "validate":
        if not diags:
            print("ok", file=stdout)
        return EXIT_OK

    out = Path(cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    svg = cfg.emit_svg if svg is None else svg
    try:
        if subcommand == "spectrum":
            run_spectrum(cfg, out)
        elif subcommand == "dynamics":
            run_dynamics(cfg, out, svg)
        elif subcommand == "compare":
            print(f"max_rel_gap={fmt(run_compare(cfg, out))}", file=stdout)
        else:
            raise ValueError(f"unknown subcommand {subcommand!r}")
    except ThreeLevelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="threelevel",
        description="Three-level atom in a two-mode field beyond the rotating-wave approximation.",
        epilog="bundled presets: " + ", ".join(preset_names()),
    )
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("config", help="config file path or bundled preset name")
    ap.add_argument("--svg", action="store_true", default=None, help="also write w.svg and q.svg")
    ap.add_argument("--out", help="output directory (overrides the config's outputs key)")
    ap.add_argument("--rwa", action="store_true", default=None, help="force eps1 = eps2 = 0")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(load_config_text(args.config))
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    overrides = {}
    if args.out:
        overrides["outputs"] = args.out
    if args.rwa:
        overrides["rwa"] = True
    if overrides:
        cfg = replace(cfg, **overrides)
    return run(args.subcommand, cfg, svg=args.svg)


if __name__ == "__main__":
    sys.exit(main())
