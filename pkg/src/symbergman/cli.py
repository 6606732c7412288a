"""Command-line driver.

Every number written here comes straight from a library call; this layer
only parses options, picks models and formats tables.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, config
from .bergman import (
    BERGMAN_COLUMNS,
    COMPARE_COLUMNS,
    PLOT_COLUMNS,
    REPRO_COLUMNS,
    RR_COLUMNS,
    bergman_rows,
    compare_expansion,
    pin_normalization,
    plot_rows,
    quadrature,
    reproduce_rows,
    riemann_roch_report,
    rr_rows,
    table_to_csv,
    table_to_json,
    _jsonable,
)
from .errors import ConfigError, InvalidInputError, NumericalDomainError
from .expansion import COEFF_COLUMNS, RECURSION_COLUMNS, coeff_report, recursion_report, required_order
from .geometry import (
    bargmann_fock_chart,
    chart_from_model,
    hermitian_einstein_chart,
    load_model,
    random_chart,
)
from .selftest import run_suite

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3

# chart sources that are not global models
CHART_SOURCES = ("bargmann_fock", "he_chart", "random_chart")


@dataclass
class RunConfig:
    command: str
    model: str = "fs1"
    k_list: list = field(default_factory=lambda: [5])
    points: list = field(default_factory=lambda: [0.0])
    N: int = 1
    rank: int = 2
    quad_radial: int = config.QUAD_RADIAL
    quad_angular: int = config.QUAD_ANGULAR
    out: str = None
    seed: int = config.DEFAULT_SEED
    fmt: str = "csv"
    filter: list = None
    flip_sign: bool = False

    def __post_init__(self):
        if not self.k_list:
            raise ConfigError("k range is empty")
        if any(k < 1 for k in self.k_list):
            raise ConfigError("k must be >= 1")
        if not 0 <= self.N <= config.MAX_ORDER:
            raise ConfigError(f"--order must be in 0..{config.MAX_ORDER}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")


def parse_k(k, k_range):
    """--k 5 or --k-range 5:30 / 5:30:5 (inclusive)."""
    if k_range:
        parts = k_range.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"bad --k-range {k_range!r}") from None
        if len(nums) == 2:
            nums.append(1)
        if len(nums) != 3 or nums[2] < 1:
            raise ConfigError(f"bad --k-range {k_range!r}; use a:b or a:b:step")
        return list(range(nums[0], nums[1] + 1, nums[2]))
    if k is not None:
        return [k]
    return None


def parse_points(spec):
    """Comma separated complex numbers (python syntax, e.g. 0.2+0.1j)."""
    if spec is None:
        return None
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(complex(tok.replace(" ", "")))
        except ValueError:
            raise ConfigError(f"bad point {tok!r}") from None
    if not out:
        raise ConfigError("no points given")
    return out


DEFAULT_K = {"coeffs": [2], "recursion": [2], "bergman": [5], "compare": list(range(5, 31, 5)), "rr": list(range(4, 21)), "reproduce": [8, 16, 24], "selftest": [1]}
DEFAULT_N = {"coeffs": 1, "recursion": 2, "compare": 1, "reproduce": 1}


def build_config(args):
    ks = parse_k(args.k, args.k_range)
    if ks is None:
        ks = DEFAULT_K[args.command]
    pts = parse_points(args.points) or [0.0]
    N = args.order if args.order is not None else DEFAULT_N.get(args.command, 1)
    return RunConfig(
        command=args.command,
        model=args.model,
        k_list=ks,
        points=pts,
        N=N,
        rank=args.rank,
        quad_radial=args.quad_radial,
        quad_angular=args.quad_angular,
        out=args.out,
        seed=args.seed,
        fmt=args.format,
        filter=args.filter.split(",") if args.filter else None,
        flip_sign=args.debug_flip_sign,
    )


def header_lines(cfg):
    return [
        f"symbergman {__version__}",
        f"command {cfg.command} model {cfg.model}",
        f"seed {cfg.seed}",
        f"conventions {config.conventions_hash()}",
    ]


def header_dict(cfg):
    return {
        "tool": f"symbergman {__version__}",
        "command": cfg.command,
        "model": cfg.model,
        "seed": cfg.seed,
        "conventions": config.conventions_hash(),
    }


def emit(cfg, name, columns, rows, extra=None):
    """Write one table to --out/<name>.<fmt> or to stdout."""
    if cfg.fmt == "csv":
        text = table_to_csv(columns, rows, header_lines(cfg))
    else:
        text = table_to_json(columns, rows, header_dict(cfg))
        if extra is not None:
            doc = json.loads(text)
            doc["matrices"] = extra
            text = json.dumps(doc, indent=1) + "\n"
    if cfg.out:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.{cfg.fmt}").write_text(text)
    else:
        sys.stdout.write(text)


def _charts(cfg, order):
    """(label, chart) pairs for the coefficient commands."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.model == "bargmann_fock":
        return [("bargmann_fock", bargmann_fock_chart(order, cfg.rank))]
    if cfg.model == "he_chart":
        return [("he_chart", hermitian_einstein_chart(rng, cfg.rank, order))]
    if cfg.model == "random_chart":
        return [("random_chart", random_chart(rng, cfg.rank, order))]
    model = load_model(cfg.model)
    return [(model.name or model.kind, chart_from_model(model, x, order)) for x in cfg.points]


def _matrix_dump(rows, keys):
    return [{c: _jsonable(r[c]) for c in ("k", "m", *keys) if c in r} for r in rows]


def cmd_coeffs(cfg):
    rows = []
    for label, chart in _charts(cfg, required_order(max(cfg.N, 1))):
        for k in cfg.k_list:
            rows.extend(coeff_report(chart, k, cfg.N, label))
    emit(cfg, "coeffs", COEFF_COLUMNS, rows, _matrix_dump(rows, ("recursion", "closed")))
    return EXIT_OK


def cmd_recursion(cfg):
    rows = []
    for label, chart in _charts(cfg, required_order(cfg.N)):
        for k in cfg.k_list:
            rows.extend(recursion_report(chart, k, cfg.N, label))
    emit(cfg, "recursion", RECURSION_COLUMNS, rows, _matrix_dump(rows, ("recursion",)))
    return EXIT_OK


def _model_quad(cfg):
    model = load_model(cfg.model)
    return model, quadrature(model, cfg.quad_radial, cfg.quad_angular)


def cmd_bergman(cfg):
    model, quad = _model_quad(cfg)
    emit(cfg, "bergman", BERGMAN_COLUMNS, bergman_rows(model, cfg.k_list, cfg.points, quad))
    return EXIT_OK


def cmd_compare(cfg):
    model, quad = _model_quad(cfg)
    rows = compare_expansion(model, cfg.k_list, cfg.points, cfg.N, quad)
    emit(cfg, "compare", COMPARE_COLUMNS, rows)
    if cfg.out:
        emit(cfg, "compare_plot", PLOT_COLUMNS, plot_rows(rows))
    return EXIT_OK


def cmd_rr(cfg):
    model, quad = _model_quad(cfg)
    consts = pin_normalization()
    recs = [riemann_roch_report(model, k, consts, quad) for k in cfg.k_list]
    emit(cfg, "rr", RR_COLUMNS, rr_rows(recs))
    return EXIT_OK


def cmd_reproduce(cfg):
    model = load_model(cfg.model)
    emit(cfg, "reproduce", REPRO_COLUMNS, reproduce_rows(model, cfg.k_list, cfg.N, cfg.points))
    return EXIT_OK


def cmd_selftest(cfg):
    results = run_suite(cfg.seed, cfg.filter, cfg.flip_sign)
    for r in results:
        tag = "PASS" if r.ok else "FAIL"
        print(f"{tag} {r.module}.{r.name} ({r.seconds:.2f}s) {r.detail}")
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_SELFTEST if failed else EXIT_OK


COMMANDS = {
    "coeffs": cmd_coeffs,
    "recursion": cmd_recursion,
    "bergman": cmd_bergman,
    "compare": cmd_compare,
    "rr": cmd_rr,
    "reproduce": cmd_reproduce,
    "selftest": cmd_selftest,
}


def build_parser():
    p = argparse.ArgumentParser(prog="symbergman", description="Bergman kernel expansions for symmetric powers of vector bundles on P^1.")
    p.add_argument("--version", action="version", version=f"symbergman {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--model", default="fs1", help="catalog name, model JSON file, or one of " + ", ".join(CHART_SOURCES))
        s.add_argument("--k", type=int)
        s.add_argument("--k-range", help="a:b or a:b:step, inclusive")
        s.add_argument("--order", type=int, help="expansion order N")
        s.add_argument("--points", help="comma separated complex points, e.g. 0,0.2+0.1j")
        s.add_argument("--rank", type=int, default=2, help="rank for generated charts")
        s.add_argument("--quad-radial", type=int, default=config.QUAD_RADIAL)
        s.add_argument("--quad-angular", type=int, default=config.QUAD_ANGULAR)
        s.add_argument("--out", help="output directory (default stdout)")
        s.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--filter", help="selftest: comma separated module names")
        s.add_argument("--debug-flip-sign", action="store_true", help="selftest: inject a curvature sign error")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDomainError as exc:
        print(f"numerical domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
