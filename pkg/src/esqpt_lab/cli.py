"""Command-line front end.

One subcommand per observable; every run emits a single table (CSV with a
versioned header comment, or JSON mirroring the same columns) whose bytes
depend only on the inputs.  Flat ``key=value`` config files supply defaults
that command-line flags override.  ``--selftest`` runs the closed-form
checks of the backing module operations and exits nonzero on any failure.

Exit codes: 0 success, 2 usage/config, 3 domain, 4 empty block, 5 no
critical point, 6 convergence/out-of-range, 7 fit, 8 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, analysis, eigen, models, semiclassics
from .errors import (ConvergenceError, DivergenceError, DomainError,
                     EmptyBlockError, EsqptError, FitError, NoEsqptError,
                     OutOfSpectrumError, WindowOverflowError)

COMMANDS = ("spectrum", "scan", "gap", "order-param", "critical", "fit-alpha",
            "scaling", "wavefunction", "degeneracy", "wkb-contour", "action",
            "lambert-w")

MODEL_CHOICES = ("lipkin", "vibron-u3", "sb-general", "bosonic-pairing",
                 "fermionic-pairing", "custom-quasispin")

_EXIT_FOR = (
    (EmptyBlockError, 4),
    (NoEsqptError, 5),
    ((ConvergenceError, OutOfSpectrumError, WindowOverflowError,
      DivergenceError), 6),
    (FitError, 7),
    (DomainError, 3),
    (EsqptError, 3),
)


# ---------------------------------------------------------------------------
# grid and config parsing
# ---------------------------------------------------------------------------

def parse_float_grid(text):
    """Grid syntax: single value, comma list, or ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid {text!r} must be start:stop:step")
        a, b, h = (float(p) for p in parts)
        if h <= 0 or b < a:
            raise DomainError(f"grid {text!r} needs stop >= start and step > 0")
        n = int(round((b - a) / h))
        return [a + i * h for i in range(n + 1) if a + i * h <= b + 1e-12]
    return [float(p) for p in text.split(",") if p.strip()]


def parse_n_grid(text):
    """N grid: single value, comma list, or decade shorthand ``1e2:1e6``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 2:
            raise DomainError(f"N grid {text!r} must be lo:hi (decades) or a list")
        lo, hi = (float(p) for p in parts)
        d0, d1 = int(round(np.log10(lo))), int(round(np.log10(hi)))
        if 10.0**d0 != lo or 10.0**d1 != hi or d1 < d0:
            raise DomainError(f"decade shorthand {text!r} needs powers of ten")
        return [10**d for d in range(d0, d1 + 1)]
    return [int(float(p)) for p in text.split(",") if p.strip()]


def parse_int_list(text):
    return [int(p) for p in str(text).split(",") if p.strip()]


def read_config_file(path):
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise DomainError(
                        f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
                key, val = (p.strip() for p in line.split("=", 1))
                values[key] = val
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc}") from exc
    return values


_OPTION_TYPES = {
    "model": str, "N": str, "xi": str, "l": int, "parity": int, "L": int,
    "L1": int, "L2": int, "omega": str, "v": str, "statistics": str,
    "eps": str, "G": str, "phase": str, "diagonal-shift": str,
    "out": str, "format": str, "k": int, "dk": float, "kmin": int,
    "kmax": int, "dxi": float, "fh": str, "blocks": str, "width": float,
    "vclass": int, "ndim": int, "well": str, "E": str, "branch": str,
    "from": float, "to": float, "points": int,
}


def _build_parser():
    top = argparse.ArgumentParser(
        prog="esqpt",
        description="Spectra, gaps and semiclassics of two-level pairing models.")
    top.add_argument("--version", action="version", version=f"esqpt-lab {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--selftest", action="store_true",
                       help="run built-in checks for this command and exit")
        if model:
            p.add_argument("--model", choices=MODEL_CHOICES)
            p.add_argument("--N", help="particle number")
            p.add_argument("--xi", help="control parameter (or grid for scan/scaling)")
            p.add_argument("--l", type=int, help="vibron angular momentum")
            p.add_argument("--parity", type=int, help="lipkin grading g")
            p.add_argument("--L", type=int, help="s-b upper-level L")
            p.add_argument("--L1", type=int, help="bosonic pairing L1")
            p.add_argument("--L2", type=int, help="bosonic pairing L2")
            p.add_argument("--omega", help="omega1,omega2 half-degeneracies")
            p.add_argument("--v", help="v1,v2 seniorities")
            p.add_argument("--statistics", choices=("boson", "fermion"))
            p.add_argument("--eps", help="custom eps1,eps2")
            p.add_argument("--G", help="custom G11,G12,G22")
            p.add_argument("--phase", choices=("plus", "minus"))
            p.add_argument("--diagonal-shift", dest="diagonal_shift",
                           choices=("auto", "on", "off"))
        return p

    add_common(sub.add_parser("spectrum", help="eigenvalues of one block"))
    add_common(sub.add_parser("scan", help="spectra over a xi grid"))
    add_common(sub.add_parser("gap", help="scaled gap vs midpoint energy"))
    p = add_common(sub.add_parser("order-param", help="occupancy expectations"))
    p.add_argument("--fh", action="store_true",
                   help="use the energy-slope route instead of eigenvectors")
    p.add_argument("--dxi", type=float, help="step for the slope route")
    add_common(sub.add_parser("critical", help="critical crossing index"))
    p = add_common(sub.add_parser("fit-alpha", help="fit the -E log|E| law"))
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p = add_common(sub.add_parser("scaling", help="gap scaling at fixed offset"))
    p.add_argument("--dk", type=float)
    p = add_common(sub.add_parser("wavefunction", help="probability decomposition"))
    p = add_common(sub.add_parser("degeneracy", help="multiplet clustering"))
    p.add_argument("--blocks", help="block labels, e.g. 0,1,2,3")
    p.add_argument("--width", type=float, help="cluster width (energy units)")
    p = add_common(sub.add_parser("wkb-contour",
                                  help="semiclassical level path E_k(xi)"),
                   model=False)
    p.add_argument("--k", type=int, required=False)
    p.add_argument("--N", help="particle number")
    p.add_argument("--xi", help="xi grid")
    p.add_argument("--vclass", type=int, help="centrifugal label v")
    p.add_argument("--ndim", type=int, help="spatial dimension n")
    p.add_argument("--well", choices=("both", "single"))
    p = add_common(sub.add_parser("action", help="classical action and period"),
                   model=False)
    p.add_argument("--xi", help="single xi")
    p.add_argument("--N", help="particle number")
    p.add_argument("--vclass", type=int)
    p.add_argument("--ndim", type=int)
    p.add_argument("--well", choices=("both", "single"))
    p.add_argument("--E", help="energy grid a:b:step or list")
    p = add_common(sub.add_parser("lambert-w", help="table of W on one branch"),
                   model=False)
    p.add_argument("--branch", help="principal | -1")
    p.add_argument("--from", dest="x_from", type=float)
    p.add_argument("--to", dest="x_to", type=float)
    p.add_argument("--points", type=int)
    return top


def _apply_config(args, parser):
    """Merge config-file values under explicit flags."""
    if not getattr(args, "config", None):
        return args
    values = read_config_file(args.config)
    known = {a.replace("-", "_") for a in vars(args)}
    for key, val in values.items():
        dest = key.replace("-", "_")
        if dest in ("config", "selftest"):
            raise DomainError(f"config key {key!r} is not allowed in a file")
        if dest not in known:
            raise DomainError(f"unknown config key {key!r}")
        if getattr(args, dest) in (None, False):
            typ = _OPTION_TYPES.get(key, str)
            try:
                parsed = (val.lower() in ("1", "true", "yes", "on")
                          if isinstance(getattr(args, dest), bool) else typ(val))
            except ValueError as exc:
                raise DomainError(f"config key {key!r}: malformed value {val!r}") from exc
            setattr(args, dest, parsed)
    return args


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

_FAMILY_OF = {
    "lipkin": "lipkin", "vibron-u3": "vibron_u3", "sb-general": "sb_general",
    "bosonic-pairing": "bosonic_pairing", "fermionic-pairing": "fermionic_pairing",
    "custom-quasispin": "custom_quasispin",
}

_ALLOWED_FLAGS = {
    "lipkin": {"parity"},
    "vibron-u3": {"l"},
    "sb-general": {"L", "v"},
    "bosonic-pairing": {"L1", "L2", "v"},
    "fermionic-pairing": {"omega", "v"},
    "custom-quasispin": {"omega", "v", "statistics", "eps", "G"},
}


def _reject_foreign_flags(args):
    model = args.model
    present = {
        "l": args.l is not None, "parity": args.parity is not None,
        "L": args.L is not None, "L1": args.L1 is not None,
        "L2": args.L2 is not None, "omega": args.omega is not None,
        "v": args.v is not None, "statistics": args.statistics is not None,
        "eps": args.eps is not None, "G": args.G is not None,
    }
    allowed = _ALLOWED_FLAGS[model]
    for flag, given in present.items():
        if given and flag not in allowed:
            raise DomainError(
                f"--{flag} does not apply to model {model} "
                f"(allowed: {', '.join(sorted(allowed)) or 'none'})")


def build_spec(args, xi):
    """ModelSpec from parsed flags at one control-parameter value."""
    if args.model is None:
        raise DomainError("--model is required")
    if args.N is None:
        raise DomainError("--N is required")
    n = int(float(args.N))
    _reject_foreign_flags(args)
    if not (0.0 <= xi <= 1.0):
        raise DomainError(f"xi = {xi} violates the [0, 1] constraint")
    kw = {}
    if args.phase:
        kw["phase"] = args.phase
    if args.diagonal_shift and args.diagonal_shift != "auto":
        kw["diagonal_shift"] = args.diagonal_shift == "on"
    model = args.model
    v1, v2 = (parse_int_list(args.v) if args.v else (0, 0))
    if model == "lipkin":
        return models.ModelSpec.lipkin(n, args.parity or 0, xi, **kw)
    if model == "vibron-u3":
        return models.ModelSpec.vibron(n, args.l or 0, xi, **kw)
    if model == "sb-general":
        if args.L is None:
            raise DomainError("sb-general requires --L")
        return models.ModelSpec.sb(n, args.L, v2 if args.v else 0, xi, **kw)
    if model == "bosonic-pairing":
        if args.L1 is None or args.L2 is None:
            raise DomainError("bosonic-pairing requires --L1 and --L2")
        return models.ModelSpec.bosonic_pairing(n, args.L1, args.L2, v1, v2,
                                                xi, **kw)
    if model == "fermionic-pairing":
        if not args.omega:
            raise DomainError("fermionic-pairing requires --omega omega1,omega2")
        om1, om2 = (float(p) for p in args.omega.split(","))
        spec = models.ModelSpec.fermionic_pairing(n, om1, om2, v1, v2, xi, **kw)
        spec.validate()
        return spec
    # custom quasispin
    if not (args.omega and args.eps and args.G and args.statistics):
        raise DomainError("custom-quasispin requires --statistics, --omega, "
                          "--eps and --G")
    om1, om2 = (float(p) for p in args.omega.split(","))
    e1, e2 = (float(p) for p in args.eps.split(","))
    g11, g12, g22 = (float(p) for p in args.G.split(","))
    return models.ModelSpec.quasispin(args.statistics, om1, om2, n, v1, v2,
                                      e1, e2, g11, g12, g22, **kw)


def _model_column(spec):
    return spec.family.replace("_", "-")


# ---------------------------------------------------------------------------
# table emission
# ---------------------------------------------------------------------------

def format_cell(value):
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def emit_table(command, columns, rows, fmt="csv", path=None):
    """Write one table; CSV carries the versioned schema comment line."""
    if not rows:
        print(f"warning: {command} produced no rows", file=sys.stderr)
    if fmt == "csv":
        lines = [f"# esqpt-lab v{__version__} {command}", ",".join(columns)]
        lines.extend(",".join(format_cell(c) for c in row) for row in rows)
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {
            "tool": "esqpt-lab",
            "version": __version__,
            "command": command,
            "columns": list(columns),
            "rows": [[(None if (isinstance(c, float) and not np.isfinite(c))
                       else (c if not isinstance(c, (np.integer, np.floating))
                             else c.item()))
                      for c in row] for row in rows],
        }
        payload = json.dumps(doc, indent=1) + "\n"
    else:
        raise DomainError(f"unknown format {fmt!r}")
    if path:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(payload)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    else:
        sys.stdout.write(payload)


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _xi_list(args, default=None):
    if args.xi is None:
        if default is None:
            raise DomainError("--xi is required")
        return default
    vals = parse_float_grid(args.xi)
    for x in vals:
        if not (0.0 <= x <= 1.0):
            raise DomainError(f"xi = {x} violates the [0, 1] constraint")
    return vals


def _single_xi(args):
    vals = _xi_list(args)
    if len(vals) != 1:
        raise DomainError("this command takes a single --xi value")
    return vals[0]


def cmd_spectrum(args):
    xi = _single_xi(args)
    spec = build_spec(args, xi)
    blk = eigen.solve_block(spec)
    rows = [(_model_column(spec), spec.n_particles, xi, spec.block_label(),
             k, e) for k, e in enumerate(blk.eigenvalues)]
    return ("model", "N", "xi", "block", "k", "energy"), rows


def cmd_scan(args):
    grid = _xi_list(args)
    spec = build_spec(args, grid[0])
    table = analysis.spectrum_scan(spec, grid)
    rows = []
    for i, x in enumerate(table.xi_grid):
        for k, e in enumerate(table.energies[i]):
            rows.append((_model_column(spec), spec.n_particles, float(x),
                         spec.block_label(), k, float(e)))
    return ("model", "N", "xi", "block", "k", "energy"), rows


def cmd_gap(args):
    xi = _single_xi(args)
    spec = build_spec(args, xi)
    mids, ndelta = analysis.gap_profile(spec)
    rows = [(_model_column(spec), spec.n_particles, xi, spec.block_label(),
             float(m), float(d)) for m, d in zip(mids, ndelta)]
    return ("model", "N", "xi", "block", "E_mid", "N_delta"), rows


def cmd_order_param(args):
    xi = _single_xi(args)
    spec = build_spec(args, xi)
    blk = eigen.solve_block(spec, want_vectors=not args.fh)
    if args.fh:
        occ = analysis.order_parameter_fh(spec, dxi=args.dxi or 1e-3)
    else:
        occ = analysis.order_parameter(blk)
    rows = [(_model_column(spec), spec.n_particles, xi, spec.block_label(),
             k, float(blk.eigenvalues[k]), float(occ[k]))
            for k in range(blk.dim)]
    return ("model", "N", "xi", "block", "k", "energy", "occupancy"), rows


def cmd_critical(args):
    xi = _single_xi(args)
    spec = build_spec(args, xi)
    kc = analysis.critical_index(spec)
    rows = [(_model_column(spec), spec.n_particles, xi, spec.block_label(),
             kc, kc / spec.n_particles)]
    return ("model", "N", "xi", "block", "k_c", "k_c_over_N"), rows


def cmd_fit_alpha(args):
    xi = _single_xi(args)
    spec = build_spec(args, xi)
    fit = analysis.fit_asymptotics(spec, kmin=args.kmin or 5, kmax=args.kmax)
    rows = [(_model_column(spec), spec.n_particles, xi, spec.block_label(),
             fit.k_c, fit.alpha, fit.alpha_below, fit.alpha_above,
             fit.hbar_omega, fit.Xi, fit.window[0], fit.window[1],
             fit.rms_residual)]
    return ("model", "N", "xi", "block", "k_c", "alpha", "alpha_below",
            "alpha_above", "hbar_omega", "Xi", "window_lo", "window_hi",
            "rms_residual"), rows


def cmd_scaling(args):
    if args.xi is None or args.N is None:
        raise DomainError("scaling requires --xi and --N grids")
    xis = _xi_list(args)
    ns = parse_n_grid(args.N)
    template = build_spec(argparse.Namespace(**{**vars(args), "N": str(ns[0])}),
                          xis[0])
    recs = analysis.scaling_study(template, xis, ns, dk=args.dk or 5.0)
    rows = [(_model_column(template), template.block_label(), r.xi,
             r.n_particles, r.dk, r.k_c, r.delta, r.n_delta, r.alpha,
             r.n_delta_semiclassical, r.n_delta_log_asymptote) for r in recs]
    return ("model", "block", "xi", "N", "dk", "k_c", "delta", "N_delta",
            "alpha", "N_delta_semiclassical", "N_delta_log_asymptote"), rows


def cmd_wavefunction(args):
    xi = _single_xi(args)
    spec = build_spec(args, xi)
    blk = eigen.solve_block(spec, want_vectors=True)
    p = analysis.wavefunction_map(blk)
    occ = blk.basis.occupancies
    rows = []
    for k in range(p.shape[0]):
        for i in range(p.shape[1]):
            rows.append((_model_column(spec), spec.n_particles, xi,
                         spec.block_label(), k, int(occ[i]), float(p[k, i])))
    return ("model", "N", "xi", "block", "k", "occupancy", "probability"), rows


def cmd_degeneracy(args):
    xi = _single_xi(args)
    if args.blocks is None:
        raise DomainError("degeneracy requires --blocks (e.g. 0,1,2,3)")
    labels = parse_int_list(args.blocks)
    base = build_spec(args, xi)

    def make(label):
        if base.family == "lipkin":
            return models.ModelSpec.lipkin(base.n_particles, label, xi,
                                           phase=base.phase)
        if base.family == "vibron_u3":
            return models.ModelSpec.vibron(base.n_particles, label, xi,
                                           phase=base.phase)
        raise DomainError("degeneracy scan supports lipkin and vibron-u3 blocks")

    clusters = analysis.degeneracy_scan(make, labels, width=args.width)
    rows = []
    for ci, c in enumerate(clusters):
        for e, lab in zip(c.energies, c.labels):
            rows.append((_model_column(base), base.n_particles, xi, ci,
                         c.energy_mean, lab, e))
    return ("model", "N", "xi", "cluster", "E_mean", "block", "energy"), rows


def cmd_wkb_contour(args):
    if args.k is None or args.N is None:
        raise DomainError("wkb-contour requires --k and --N")
    xis = _xi_list(args)
    n = int(float(args.N))
    v = args.vclass or 0
    ndim = args.ndim if args.ndim is not None else 2
    energies, slopes = semiclassics.wkb_contour(
        args.k, n, xis, v=v, n=ndim, well=args.well or "both")
    rows = [(v, ndim, n, args.k, x, float(e), float(s))
            for x, e, s in zip(xis, energies, slopes)]
    return ("v", "n", "N", "k", "xi", "energy", "dE_dxi"), rows


def cmd_action(args):
    if args.E is None or args.xi is None:
        raise DomainError("action requires --xi and --E")
    xi = _single_xi(args)
    n = int(float(args.N)) if args.N else 1
    v = args.vclass or 0
    ndim = args.ndim if args.ndim is not None else 1
    well = args.well or "both"
    sys_ = semiclassics.ClassicalSystem(xi=xi, v=v, n=ndim, N=n)
    rows = []
    for e in parse_float_grid(args.E):
        s = semiclassics.action(sys_, e, well=well)
        try:
            tau = semiclassics.action_energy_derivative(sys_, e, well=well)
        except DivergenceError:
            tau = float("nan")
        rows.append((xi, v, ndim, n, e, s, tau))
    return ("xi", "v", "n", "N", "E", "action", "period"), rows


def cmd_lambert_w(args):
    if args.branch is None or args.x_from is None or args.x_to is None:
        raise DomainError("lambert-w requires --branch, --from and --to")
    branch = {"principal": "principal", "0": "principal",
              "-1": "minus_one", "minus-one": "minus_one",
              "minus_one": "minus_one"}.get(str(args.branch))
    if branch is None:
        raise DomainError(f"unknown branch {args.branch!r}")
    pts = args.points or 100
    if pts < 2:
        raise DomainError("need at least 2 points")
    xs = np.linspace(args.x_from, args.x_to, pts)
    ws = semiclassics.lambert_w(branch, xs)
    label = "principal" if branch == "principal" else "-1"
    rows = [(label, float(x), float(w)) for x, w in zip(xs, ws)]
    return ("branch", "x", "w"), rows


_RUNNERS = {
    "spectrum": cmd_spectrum, "scan": cmd_scan, "gap": cmd_gap,
    "order-param": cmd_order_param, "critical": cmd_critical,
    "fit-alpha": cmd_fit_alpha, "scaling": cmd_scaling,
    "wavefunction": cmd_wavefunction, "degeneracy": cmd_degeneracy,
    "wkb-contour": cmd_wkb_contour, "action": cmd_action,
    "lambert-w": cmd_lambert_w,
}


# ---------------------------------------------------------------------------
# selftests: closed-form checks per command
# ---------------------------------------------------------------------------

def _selftest(command):
    ok = True

    def check(name, cond):
        nonlocal ok
        status = "ok" if cond else "FAILED"
        print(f"selftest {command}: {name}: {status}")
        ok = ok and bool(cond)

    if command in ("spectrum", "scan"):
        blk = eigen.solve_block(models.ModelSpec.lipkin(10, 0, 0.0))
        check("lipkin xi=0 diagonal", np.allclose(blk.eigenvalues,
                                                  np.arange(0, 11, 2) / 10))
        blk = eigen.solve_block(models.ModelSpec.vibron(2, 0, 1.0))
        check("vibron N=2 xi=1 levels", np.allclose(blk.eigenvalues, [-1.5, 0.0]))
    elif command == "gap":
        mids, nd = analysis.gap_profile(models.ModelSpec.vibron(100, 0, 0.0))
        check("xi=0 scaled gap == 2", np.allclose(nd, 2.0))
    elif command == "order-param":
        occ = analysis.order_parameter(models.ModelSpec.vibron(40, 0, 0.0))
        check("xi=0 occupancies are the basis", np.allclose(occ, np.arange(0, 41, 2)))
    elif command == "critical":
        try:
            analysis.critical_index(models.ModelSpec.vibron(100, 0, 0.15))
            check("xi<1/5 raises", False)
        except NoEsqptError:
            check("xi<1/5 raises", True)
    elif command == "fit-alpha":
        Xi = semiclassics.barrier_curvature(0.5)
        fit0 = semiclassics.AsymptoticFit(150.5, 2.2, np.sqrt(Xi) / 300, Xi)
        es = np.array([semiclassics.esqpt_energy_estimate(fit0, 300, 0.5, k)
                       for k in range(120, 181)])
        blk = eigen.SpectrumBlock(models.ModelSpec.vibron(300, 0, 0.5), None, es)
        fit = analysis.fit_asymptotics(blk, kmin=5, kmax=20)
        check("alpha round trip", abs(fit.alpha - 2.2) < 1e-6)
        check("k_c round trip", abs(fit.k_c + 120 - 150.5) < 1e-9)
    elif command == "scaling":
        s, _ = analysis.scaling_exponent([100, 200, 400, 800],
                                         [0.02, 0.01, 0.005, 0.0025])
        check("slope -1 exactly", abs(s + 1.0) < 1e-12)
    elif command == "wavefunction":
        p = analysis.wavefunction_map(models.ModelSpec.vibron(30, 0, 0.0))
        check("xi=0 map is the identity", np.allclose(p, np.eye(16)))
    elif command == "degeneracy":
        cl = analysis.degeneracy_scan(
            lambda l: models.ModelSpec.vibron(25, l, 0.1), range(3))
        comps = {tuple(sorted(c.labels)) for c in cl if c.size > 1}
        check("no-barrier regime: uniform multiplet composition",
              len(comps) <= 1)
    elif command == "wkb-contour":
        e = semiclassics.wkb_level(
            semiclassics.ClassicalSystem(xi=0.0, n=1, N=100), 3)
        check("harmonic level (k+1/2)/N", abs(e - 0.035) < 1e-12)
    elif command == "action":
        s = semiclassics.action(semiclassics.ClassicalSystem(xi=0.0, n=1, N=10), 0.3)
        check("harmonic action 2 pi E", abs(s - 2 * np.pi * 0.3) < 1e-10)
        s_bot = semiclassics.action(
            semiclassics.ClassicalSystem(xi=0.5, n=1, N=10), -0.28125,
            well="single")
        check("action vanishes at the well bottom", abs(s_bot) < 1e-6)
    elif command == "lambert-w":
        w0 = semiclassics.lambert_w("principal", np.e)
        wm = semiclassics.lambert_w("minus_one", -np.exp(-1.0))
        check("W0(e) = 1", abs(w0 - 1.0) < 1e-14)
        check("W-1(-1/e) = -1", abs(wm + 1.0) < 1e-12)
        xs = np.linspace(-0.367879, -1e-6, 200)
        ws = semiclassics.lambert_w("minus_one", xs)
        check("branch -1 monotone", np.all(np.diff(ws) < 0))
    return 0 if ok else 1


_NUMERIC_OPTS = ("--from", "--to", "--E")


def _merge_negative_values(argv):
    """Join numeric options with negative/scientific values ('--to -1e-6')
    into '--to=-1e-6' so argparse does not mistake them for flags."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _NUMERIC_OPTS and i + 1 < len(argv) \
                and argv[i + 1][:1] == "-" and len(argv[i + 1]) > 1 \
                and argv[i + 1][1] in "0123456789.":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


@dataclass(frozen=True)
class RunConfig:
    """One fully validated invocation: subcommand plus merged options."""

    command: str
    options: argparse.Namespace

    @property
    def selftest(self):
        return bool(self.options.selftest)


def parse_config(argv, config_file=None) -> RunConfig:
    """Parse flags (and an optional key=value file) into a RunConfig.

    File values fill in unset flags; explicit flags win.  Unknown flags,
    unknown config keys, malformed numbers and options foreign to the
    chosen model are all rejected with actionable messages.
    """
    parser = _build_parser()
    args = parser.parse_args(_merge_negative_values(list(argv)))
    if config_file is not None and not args.config:
        args.config = config_file
    args = _apply_config(args, parser)
    if getattr(args, "model", None) is not None:
        _reject_foreign_flags(args)
    return RunConfig(command=args.command, options=args)


def run_command(config: RunConfig) -> int:
    """Execute one configured subcommand; emit its table; return exit code."""
    args = config.options
    try:
        if config.selftest:
            return _selftest(config.command)
        columns, rows = _RUNNERS[config.command](args)
        emit_table(config.command, columns, rows, fmt=args.format or "csv",
                   path=args.out)
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 8
    except EsqptError as exc:
        for klass, code in _EXIT_FOR:
            if isinstance(exc, klass):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
    except EsqptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return run_command(config)


if __name__ == "__main__":
    sys.exit(main())
