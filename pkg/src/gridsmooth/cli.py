"""Command-line interface.

Subcommands: ``stencil``, ``generate``, ``smooth``, ``select`` and
``experiment``. Exit status is 0 on success, 1 on runtime or numerical
errors and 2 on usage errors.
"""
import argparse
import dataclasses
import os
import sys

import numpy as np

from . import datagen
from .baselines import BasisSmoother, KernelSmoother
from .errors import GridSmoothError
from .io import format_value, read_curves, write_curves, write_report
from .penalty import PenaltySpec, standard_stencils
from .selection import alpha_grid, eta_heuristic, select_alpha, select_sequential, select_simultaneous
from .smoother import order_penalties, smooth
from .stencils import MAX_ORDER, binomial_stencil, canonical_family, format_stencil

SUBCOMMANDS = ("stencil", "generate", "smooth", "select", "experiment")
SMOOTH_METHODS = ("convex", "sequential", "simultaneous", "fourier", "bspline", "kernel")
SELECT_MODES = ("single", "sequential", "simultaneous")
EXPERIMENTS = ("table1", "table2", "convergence", "energy", "linearity")
CURVE_KINDS = ("sinusoid", "irregular", "gp")


@dataclasses.dataclass
class RunConfig:
    """Validated settings for one CLI invocation."""

    subcommand: str
    method: str = "convex"
    mode: str = "single"
    orders: tuple = (2,)
    alphas: tuple = None
    alpha_grid: tuple = (1e-4, 1e4, 40)
    eta: object = 0.5
    seed: int = 20240601
    input: str = None
    output: str = None
    name: str = None
    threads: int = None
    reps: int = None
    n: int = 1
    d: int = 100
    kind: str = "sinusoid"
    noise: str = "gaussian"
    sigma: float = 0.2
    mix_cumulative: float = 0.0
    lengthscale: float = 0.1
    n_basis: int = 25
    penalty_order: int = 2
    bandwidth: float = 0.05
    max_order: int = MAX_ORDER
    binomial: bool = False
    unit_binomial: bool = False
    repeats: int = None
    variance_scaling: str = "verbatim"
    tuning: str = "oracle"
    figures: bool = True

    @classmethod
    def from_mapping(cls, mapping):
        """Build from a dict; unknown keys are rejected."""
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        config = cls(**mapping)
        problem = config.problem()
        if problem:
            raise ValueError(problem)
        return config

    def problem(self):
        """First validation failure as a message, or None."""
        if self.subcommand not in SUBCOMMANDS:
            return f"unknown subcommand {self.subcommand!r}"
        if self.eta != "auto" and not 0.0 <= self.eta <= 1.0:
            return f"--eta must lie in [0, 1] or be 'auto', got {self.eta}"
        if any(r < 1 or r > MAX_ORDER for r in self.orders):
            return f"orders must lie in 1..{MAX_ORDER}"
        if len(set(self.orders)) != len(self.orders):
            return "orders must be distinct"
        if self.alphas is not None:
            if any(a < 0 for a in self.alphas):
                return "alphas must be nonnegative"
            if len(self.alphas) != len(self.orders) and self.method in ("sequential", "simultaneous"):
                return "need one alpha per order"
        lo, hi, count = self.alpha_grid
        if lo <= 0 or hi < lo or count < 1:
            return "--alpha-grid needs 0 < min <= max and count >= 1"
        if self.threads is not None and self.threads < 1:
            return "--threads must be at least 1"
        for key in ("reps", "repeats"):
            v = getattr(self, key)
            if v is not None and v < 1:
                return f"--{key} must be at least 1"
        if self.n < 1 or self.d < 2:
            return "--n must be >= 1 and --d >= 2"
        if self.sigma < 0 or not 0 <= self.mix_cumulative <= 1:
            return "--sigma must be >= 0 and --mix-cumulative in [0, 1]"
        if self.bandwidth <= 0 or self.n_basis < 1 or self.lengthscale <= 0:
            return "--bandwidth, --n-basis and --lengthscale must be positive"
        if self.subcommand == "smooth" and self.method in ("convex",) and len(self.orders) != 1:
            return "--method convex takes a single --order"
        if self.subcommand == "select" and self.mode == "single" and len(self.orders) != 1:
            return "--mode single takes a single --order"
        if self.subcommand == "experiment" and self.name not in EXPERIMENTS:
            return f"--name must be one of {EXPERIMENTS}"
        return None


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text):
    parts = text.split(",")
    try:
        if len(parts) != 3:
            raise ValueError
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected min,max,count, got {text!r}") from None


def _eta(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gridsmooth",
        description="Penalized smoothing of curves on a regular grid with decorrelated difference penalties.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=20240601)
    common.add_argument("--out", dest="output", help="output file or directory (default: stdout)")

    penal = argparse.ArgumentParser(add_help=False)
    penal.add_argument("--order", dest="orders", type=_int_list, default=(2,),
                       help="difference order(s), comma-separated")
    penal.add_argument("--eta", type=_eta, default=0.5,
                       help="blend weight in [0, 1] between standard and calibrated penalty, or 'auto'")
    penal.add_argument("--alpha-grid", type=_grid, default=(1e-4, 1e4, 40), metavar="MIN,MAX,COUNT")
    penal.add_argument("--unit-binomial", action="store_true",
                       help="normalize the binomial stencils of the standard penalty to unit norm")

    p = sub.add_parser("stencil", parents=[common], help="print the decorrelated stencil family")
    p.add_argument("--max-order", type=int, default=MAX_ORDER)
    p.add_argument("--binomial", action="store_true", help="print binomial stencils instead")

    p = sub.add_parser("generate", parents=[common], help="simulate noisy curves")
    p.add_argument("--kind", choices=CURVE_KINDS, default="sinusoid")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--noise", choices=datagen.DISTRIBUTIONS, default="gaussian")
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--mix-cumulative", type=float, default=0.0,
                   help="weight of the random-walk noise component")
    p.add_argument("--lengthscale", type=float, default=0.1)

    p = sub.add_parser("smooth", parents=[common, penal], help="smooth curves from a CSV file")
    p.add_argument("input")
    p.add_argument("--method", choices=SMOOTH_METHODS, default="convex")
    p.add_argument("--alpha", dest="alphas", type=_float_list,
                   help="smoothing parameter(s); chosen by GCV when omitted")
    p.add_argument("--n-basis", type=int, default=25)
    p.add_argument("--penalty-order", type=int, default=2)
    p.add_argument("--bandwidth", type=float, default=0.05)

    p = sub.add_parser("select", parents=[common, penal], help="choose alpha by GCV")
    p.add_argument("input")
    p.add_argument("--mode", choices=SELECT_MODES, default="single")

    p = sub.add_parser("experiment", parents=[common], help="run a reproducible experiment")
    p.add_argument("--name", choices=EXPERIMENTS, required=True)
    p.add_argument("--reps", type=int, help="replications (tables) or draws (energy)")
    p.add_argument("--repeats", type=int, help="independent repeats per n (convergence)")
    p.add_argument("--threads", type=int)
    p.add_argument("--variance-scaling", choices=("verbatim", "per_n"), default="verbatim")
    p.add_argument("--tuning", choices=("oracle", "gcv", "both"), default="oracle")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    return parser


def _threads_from_env():
    env = os.environ.get("GRIDSMOOTH_THREADS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        return -1


def parse_args(argv=None):
    """Parse and validate; usage errors exit with status 2."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    if ns.get("subcommand") == "experiment" and ns.get("threads") is None:
        ns["threads"] = _threads_from_env()
    if "max_order" in ns and not 0 <= ns["max_order"] <= MAX_ORDER:
        parser.error(f"--max-order must lie in 0..{MAX_ORDER}")
    try:
        return RunConfig.from_mapping(ns)
    except ValueError as exc:
        parser.error(str(exc))


def _emit_rows(header, rows, output):
    text = ",".join(header) + "\n" + "".join(
        ",".join(format_value(v) for v in row) + "\n" for row in rows
    )
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_stencil(cfg):
    if cfg.binomial:
        members = [binomial_stencil(r) for r in range(1, cfg.max_order + 1)]
    else:
        members = list(canonical_family(cfg.max_order))
    text = "".join(format_stencil(s) + "\n" for s in members)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(cfg):
    if cfg.kind == "gp":
        batch = datagen.gp_batch(cfg.n, cfg.d, cfg.lengthscale, cfg.sigma, cfg.seed)
        values, truth = batch.values, batch.truth
    else:
        spec = datagen.NoiseSpec(cfg.noise, mix_white=1.0 - cfg.mix_cumulative,
                                 mix_cumulative=cfg.mix_cumulative, sigma=cfg.sigma)
        if cfg.kind == "sinusoid":
            truth = np.tile(datagen.sinusoid(cfg.d), (cfg.n, 1))
        else:
            truth = np.stack([datagen.irregular_curve(cfg.d, cfg.seed, i) for i in range(cfg.n)])
        eps = np.stack([datagen.noise(cfg.d, spec, cfg.seed, i) for i in range(cfg.n)])
        values = truth + eps
    write_curves(cfg.output or sys.stdout, values, truth)


def _etas(cfg, x):
    if cfg.eta == "auto":
        return [eta_heuristic(row) for row in x]
    return [cfg.eta] * x.shape[0]


def _basis_gcv(cfg, x):
    d = x.shape[1]
    fits, scores = [], []
    for a in alpha_grid(*cfg.alpha_grid):
        s = BasisSmoother(cfg.method, cfg.n_basis, cfg.penalty_order, a, d)
        fit = s.apply(x)
        denom = (d - s.effective_df) ** 2
        rss = np.sum((x - fit) ** 2, axis=1)
        fits.append(fit)
        scores.append(rss / denom if denom > 1e-12 * d * d else np.full(x.shape[0], np.inf))
    pick = np.argmin(np.array(scores), axis=0)
    return np.array(fits)[pick, np.arange(x.shape[0])]


def cmd_smooth(cfg):
    x = read_curves(cfg.input).values
    d = x.shape[1]
    if cfg.method == "kernel":
        out = KernelSmoother(cfg.bandwidth, d).apply(x)
    elif cfg.method in ("fourier", "bspline"):
        if cfg.alphas is not None:
            out = BasisSmoother(cfg.method, cfg.n_basis, cfg.penalty_order, cfg.alphas[0], d).apply(x)
        else:
            out = _basis_gcv(cfg, x)
    else:
        mode = "single" if cfg.method == "convex" else cfg.method
        binomials = standard_stencils(max(cfg.orders), normalize=cfg.unit_binomial)
        grid = alpha_grid(*cfg.alpha_grid)
        out = np.empty_like(x)
        for i, (row, eta) in enumerate(zip(x, _etas(cfg, x))):
            if cfg.alphas is not None:
                alphas = cfg.alphas[:1] if mode == "single" else cfg.alphas
                spec = PenaltySpec(cfg.orders, eta, alphas, mode)
                out[i] = smooth(row, spec, binomials=binomials)
                continue
            spec = PenaltySpec(cfg.orders, eta, None, mode)
            if mode == "single":
                (pen,) = order_penalties(spec, d, binomials=binomials)
                out[i] = select_alpha(row, pen, grid).fitted
            elif mode == "sequential":
                out[i] = select_sequential(row, spec, [grid] * len(cfg.orders),
                                           binomials=binomials)[-1].fitted
            else:
                out[i] = select_simultaneous(row, spec, [grid] * len(cfg.orders),
                                             binomials=binomials).fitted
    write_curves(cfg.output or sys.stdout, out)


def cmd_select(cfg):
    x = read_curves(cfg.input).values
    d = x.shape[1]
    binomials = standard_stencils(max(cfg.orders), normalize=cfg.unit_binomial)
    grid = alpha_grid(*cfg.alpha_grid)
    rows = []
    for i, (row, eta) in enumerate(zip(x, _etas(cfg, x))):
        spec = PenaltySpec(cfg.orders, eta, None, cfg.mode)
        if cfg.mode == "single":
            (pen,) = order_penalties(spec, d, binomials=binomials)
            res = select_alpha(row, pen, grid)
            rows.append((i, cfg.orders[0], eta, res.alpha_hat, res.score, res.effective_df))
        elif cfg.mode == "sequential":
            results = select_sequential(row, spec, [grid] * len(cfg.orders), binomials=binomials)
            for r, res in zip(sorted(cfg.orders, reverse=True), results):
                rows.append((i, r, eta, res.alpha_hat, res.score, res.effective_df))
        else:
            res = select_simultaneous(row, spec, [grid] * len(cfg.orders), binomials=binomials)
            for r, a in zip(cfg.orders, res.alphas):
                rows.append((i, r, eta, a, res.score, res.effective_df))
    _emit_rows(("curve", "order", "eta", "alpha", "gcv", "effective_df"), rows, cfg.output)


def run_experiment(cfg):
    from .experiments import benchmark, convergence, diagnostics

    threads = cfg.threads or benchmark.default_threads()
    if cfg.name == "table1":
        kw = {"n_reps": cfg.reps} if cfg.reps else {}
        return benchmark.run_table1(seed=cfg.seed, threads=threads, tuning=cfg.tuning, **kw)
    if cfg.name == "table2":
        kw = {"n_reps": cfg.reps} if cfg.reps else {}
        return benchmark.run_table2(seed=cfg.seed, threads=threads, tuning=cfg.tuning, **kw)
    if cfg.name == "convergence":
        kw = {"n_repeats": cfg.repeats} if cfg.repeats else {}
        return convergence.run_convergence(seed=cfg.seed, threads=threads,
                                           variance_scaling=cfg.variance_scaling, **kw)
    if cfg.name == "energy":
        kw = {"n_draws": cfg.reps} if cfg.reps else {}
        return diagnostics.run_energy_decomposition(seed=cfg.seed, **kw)
    return diagnostics.contrast_report(diagnostics.run_contrast_linearity(seed=cfg.seed))


def cmd_experiment(cfg):
    report = run_experiment(cfg)
    if cfg.output:
        for path in write_report(report, cfg.output, figures=cfg.figures):
            print(path)
    else:
        _emit_rows(report.columns, ([c[k] for k in report.columns] for c in report.cells), None)


COMMANDS = {
    "stencil": cmd_stencil,
    "generate": cmd_generate,
    "smooth": cmd_smooth,
    "select": cmd_select,
    "experiment": cmd_experiment,
}


def main(argv=None):
    cfg = parse_args(argv)
    try:
        COMMANDS[cfg.subcommand](cfg)
    except (GridSmoothError, OSError, np.linalg.LinAlgError) as exc:
        print(f"gridsmooth: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
