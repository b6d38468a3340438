"""Command-line driver.

Every subcommand maps onto one library operation and writes its product
through serialize(); nothing here computes anything on its own.  Exit
codes: 0 success, 2 domain error, 3 not found / undetermined, 64 usage,
74 output I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .errors import DomainError, NotFoundError, StiffnessError
from .model import Params, State
from . import equilibria as eq
from . import bifurcation as bif
from . import dynamics as dyn
from .serialize import Table, serialize
from ._svg import render_svg

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NOT_FOUND = 3
EXIT_USAGE = 64
EXIT_IO = 74


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via exit code 64."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: str
    params: Optional[Params] = None
    ranges: dict = field(default_factory=dict)
    grid: Optional[dyn.GridSpec] = None
    tolerances: dict = field(default_factory=dict)
    output_path: str = "-"
    format: str = "json"
    svg_path: Optional[str] = None
    no_meta: bool = False
    extra: dict = field(default_factory=dict)


def _parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric range {text!r}")
    if step <= 0 or hi <= lo:
        raise argparse.ArgumentTypeError(
            f"range must satisfy lo < hi and step > 0: {text!r}")
    return lo, hi, step


def _range_values(rng: tuple[float, float, float]) -> np.ndarray:
    lo, hi, step = rng
    n = int(round((hi - lo) / step)) + 1
    vals = lo + step * np.arange(n)
    return vals[vals <= hi + 0.5 * step]


def _parse_bracket(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric bracket {text!r}")
    if hi <= lo:
        raise argparse.ArgumentTypeError(f"bracket must increase: {text!r}")
    return lo, hi


def _load_config(path: str) -> dict:
    """Flat key = value lines, UTF-8, # comments."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(
                    f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key] = value
    return mapping


def _inject_config(argv: list[str]) -> list[str]:
    """Turn --config entries into flags placed before the explicit ones,
    so the command line keeps the last word."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise _UsageError("--config needs a file argument")
    try:
        mapping = _load_config(argv[i + 1])
    except OSError as exc:
        raise _UsageError(f"cannot read config: {exc}")
    rest = argv[:i] + argv[i + 2:]
    if not rest:
        raise _UsageError("--config given without a subcommand")
    injected = []
    for key, value in mapping.items():
        flag = "--" + key.replace("_", "-")
        if value.lower() == "true":
            injected.append(flag)
        elif value.lower() == "false":
            continue
        else:
            injected += [flag, value]
    return [rest[0]] + injected + rest[1:]


def _add_common(sp, params=(), need_state=False):
    for name in params:
        sp.add_argument("--" + name, type=float, required=True)
    if need_state:
        sp.add_argument("--u0", type=float, required=True)
        sp.add_argument("--v0", type=float, required=True)
    sp.add_argument("--tol", type=float, default=None,
                    help="integrator tolerance override")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default="-", help="output path, - for stdout")
    sp.add_argument("--svg", default=None, help="also render a static SVG")
    sp.add_argument("--no-meta", action="store_true",
                    help="suppress the timestamp header")
    sp.add_argument("--config", default=None,
                    help="flat key = value defaults file")


def build_parser() -> _Parser:
    parser = _Parser(prog="bazykin")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("equilibria", help="locate and classify equilibria")
    _add_common(sp, ("C", "M", "N", "Q"))

    sp = sub.add_parser("classify", help="case labels and origin structure")
    _add_common(sp, ("C", "M", "N", "Q"))

    sp = sub.add_parser("sweep-sn", help="saddle-node locus over a C range")
    _add_common(sp, ("M", "N"))
    sp.add_argument("--C", type=_parse_range, required=True,
                    metavar="LO:HI:STEP")

    sp = sub.add_parser("hopf-curve", help="Hopf locus in the (U, V) chart")
    _add_common(sp, ("C", "M"))

    sp = sub.add_parser("bautin", help="degenerate-Hopf point on the locus")
    _add_common(sp, ("C", "M"))

    sp = sub.add_parser("bt", help="Bogdanov-Takens certificate")
    _add_common(sp, ("M", "N"))

    sp = sub.add_parser("cycles", help="limit-cycle census")
    _add_common(sp, ("C", "M", "N", "Q"))

    sp = sub.add_parser("homoclinic", help="bisect the loop parameter")
    _add_common(sp, ("C", "M", "N"))
    sp.add_argument("--Q", type=_parse_bracket, required=True,
                    metavar="LO:HI")

    sp = sub.add_parser("basin", help="basin-of-attraction raster")
    _add_common(sp, ("C", "M", "N", "Q"))
    sp.add_argument("--u", type=_parse_range, required=True,
                    metavar="LO:HI:STEP")
    sp.add_argument("--v", type=_parse_range, required=True,
                    metavar="LO:HI:STEP")

    sp = sub.add_parser("phase", help="integrate one trajectory")
    _add_common(sp, ("C", "M", "N", "Q"), need_state=True)
    sp.add_argument("--t", type=float, required=True,
                    help="integration time (negative runs backwards)")

    sp = sub.add_parser("diagram", help="two-parameter bifurcation skeleton")
    _add_common(sp, ("M", "N"))
    sp.add_argument("--Q", type=_parse_bracket, required=True,
                    metavar="LO:HI")
    sp.add_argument("--C", type=_parse_range, required=True,
                    metavar="LO:HI:STEP")
    sp.add_argument("--hom-samples", type=int, default=6)

    return parser


def _grid_from_ranges(u_rng, v_rng) -> dyn.GridSpec:
    us = _range_values(u_rng)
    vs = _range_values(v_rng)
    return dyn.GridSpec(u_lo=float(us[0]), u_hi=float(us[-1]),
                        v_lo=float(vs[0]), v_hi=float(vs[-1]),
                        n_u=len(us), n_v=len(vs))


def _make_config(args) -> tuple[RunConfig, dict]:
    cfg = RunConfig(command=args.command,
                    output_path=args.out,
                    format=args.format,
                    svg_path=args.svg,
                    no_meta=args.no_meta)
    if args.tol is not None:
        cfg.tolerances["tol"] = args.tol
    scalar = {}
    for name in ("C", "M", "N", "Q"):
        val = getattr(args, name, None)
        if isinstance(val, float):
            scalar[name] = val
        elif isinstance(val, tuple):
            cfg.ranges[name] = val
    if len(scalar) == 4:
        cfg.params = Params(**scalar)
    cfg.extra = {k: v for k, v in vars(args).items()
                 if k in ("u0", "v0", "t", "hom_samples")}
    if "u" in vars(args) and isinstance(args.u, tuple):
        cfg.grid = _grid_from_ranges(args.u, args.v)
    return cfg, scalar


def _tol_kwargs(cfg):
    return {"tol": cfg.tolerances["tol"]} if "tol" in cfg.tolerances else {}


def _run_equilibria(cfg, scalar):
    p = cfg.params
    interior = []
    for e in eq.interior_equilibria(p):
        if e.multiplicity == 1:
            cls = eq.classify_interior(p, e)
        else:
            cls = eq.classify_collapsed(p)
        interior.append({"equilibrium": e, "classification": cls})
    boundary = []
    for e in eq.boundary_equilibria(p):
        if e.kind is eq.EquilibriumKind.Origin:
            cls = eq.classify_origin(p)
        else:
            cls = eq.classify_carrying_capacity(p)
        boundary.append({"equilibrium": e, "classification": cls})
    return {"params": p, "interior": interior, "boundary": boundary}


def _run_classify(cfg, scalar):
    p = cfg.params
    return {
        "params": p,
        "sigma": eq.sigma_delta(p),
        "origin": eq.classify_origin(p),
        "blowup": eq.blowup_eigenvalues(p),
    }


def _run_sweep_sn(cfg, scalar):
    rows = []
    for c in _range_values(cfg.ranges["C"]):
        try:
            rows.append((float(c), bif.saddle_node_Q(c, scalar["M"],
                                                     scalar["N"])))
        except DomainError:
            continue
    if not rows:
        raise NotFoundError("no saddle-node point in the swept range")
    return Table(columns=("C", "Q_SN"), rows=rows)


def _run_hopf_curve(cfg, scalar):
    data = bif.hopf_curve_UV(scalar["C"], scalar["M"])
    if not data:
        raise NotFoundError("empty Hopf locus at these parameters")
    return Table(
        columns=("U", "V", "M_hopf", "D_H", "w", "l1", "L1_sign"),
        rows=[(h.U, h.V, h.M_hopf, h.D_H, h.w, h.l1, h.L1_sign.name)
              for h in data])


def _run_bautin(cfg, scalar):
    u, v = bif.bautin_point(scalar["C"], scalar["M"])
    return Table(columns=("U", "V"), rows=[(u, v)])


def _run_bt(cfg, scalar):
    return bif.bt_point(scalar["M"], scalar["N"])


def _run_cycles(cfg, scalar):
    return dyn.find_limit_cycles(cfg.params, **_tol_kwargs(cfg))


def _run_homoclinic(cfg, scalar):
    lo, hi = cfg.ranges["Q"]
    q = dyn.homoclinic_Q(scalar["C"], scalar["M"], scalar["N"], lo, hi,
                         **_tol_kwargs(cfg))
    return Table(columns=("C", "M", "N", "Q_hom"),
                 rows=[(scalar["C"], scalar["M"], scalar["N"], q)])


def _run_basin(cfg, scalar):
    return dyn.basin_raster(cfg.params, cfg.grid, **_tol_kwargs(cfg))


def _run_phase(cfg, scalar):
    s0 = State(cfg.extra["u0"], cfg.extra["v0"])
    return dyn.integrate(cfg.params, s0, cfg.extra["t"], **_tol_kwargs(cfg))


def _run_diagram(cfg, scalar):
    q_lo, q_hi = cfg.ranges["Q"]
    c_lo, c_hi, c_step = cfg.ranges["C"]
    n_c = len(_range_values(cfg.ranges["C"]))
    return bif.trace_diagram(scalar["M"], scalar["N"], (q_lo, q_hi),
                             (c_lo, c_hi), n_C=n_c,
                             hom_samples=cfg.extra["hom_samples"])


_RUNNERS = {
    "equilibria": _run_equilibria,
    "classify": _run_classify,
    "sweep-sn": _run_sweep_sn,
    "hopf-curve": _run_hopf_curve,
    "bautin": _run_bautin,
    "bt": _run_bt,
    "cycles": _run_cycles,
    "homoclinic": _run_homoclinic,
    "basin": _run_basin,
    "phase": _run_phase,
    "diagram": _run_diagram,
}


def _emit(cfg: RunConfig, product) -> None:
    payload = serialize(product, cfg.format)
    if not cfg.no_meta:
        stamp = datetime.now(timezone.utc).isoformat()
        if cfg.format == "csv":
            payload = f"# generated {stamp}\r\n".encode() + payload
        else:
            doc = json.loads(payload)
            stamped = {"schema": doc.pop("schema"), "generated": stamp}
            stamped.update(doc)
            payload = (json.dumps(stamped, indent=2) + "\n").encode()
    if cfg.output_path == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    else:
        with open(cfg.output_path, "wb") as fh:
            fh.write(payload)
    if cfg.svg_path is not None:
        with open(cfg.svg_path, "wb") as fh:
            fh.write(render_svg(product))


def cli_main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _inject_config(list(argv))
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg, scalar = _make_config(args)
        product = _RUNNERS[args.command](cfg, scalar)
        _emit(cfg, product)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NotFoundError, StiffnessError) as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
