"""Command-line interface.

Subcommands: generate, sweep, detect, lens, reduce, scalecheck, reproduce.
Exit codes: 0 ok, 1 usage error, 2 numerical failure, 3 theorem-violation diagnostic.
The default output directory is taken from QAGAP_OUTPUT_DIR (else ./qagap-out).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .anticross import DetectionError, HyperbolaFitError, hyperbola_fit
from .hamiltonian import DriverSpec, SystemHamiltonian
from .instances import (
    IsingModel,
    WeightedGraph,
    gen_chain5,
    gen_chain7,
    gen_loop_gadget,
    instance_to_json,
    load_instance,
)
from .krylov import EigensolverError
from .lens import Cutoff, predict, spectrum_table
from .pipeline import analyze, as_ising, dumps, write_json
from .reduction import ReductionError, reduce_and_verify
from .reproduce import FIGURES, reproduce
from .scaling import eigen_scaling_check, min_gap_scale_report
from .spectra import default_grid

ENV_OUTPUT_DIR = "QAGAP_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_THEOREM = 0, 1, 2, 3

logger = logging.getLogger("qagap")


class UsageError(Exception):
    pass


class TheoremViolation(Exception):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_output_dir() -> Path:
    return Path(os.environ.get(ENV_OUTPUT_DIR, "qagap-out"))


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    instance: str | None = None
    gen: str | None = None
    w4: float = 1.49
    n: int = 4
    R: float = 4.0
    normalize: bool = False
    penalty: float | None = None
    driver: str = "X"
    xx_lambda: float = -1.0
    xx_edges: str = "same-as-problem"
    alpha: float = 1.0
    grid_step: float = 1e-3
    k: int = 5
    gamma: float = 0.15
    epsilon: float = 0.001
    gamma_prime: float = 0.5
    rank_cut: int = 8
    lens_window: float | None = None
    out_dir: Path = field(default_factory=default_output_dir)
    workers: int = 1
    seed: int = 0

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        keys = cls.__dataclass_fields__
        cfg = cls(**{k: v for k, v in vars(ns).items() if k in keys and v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if (self.instance is None) == (self.gen is None):
            raise UsageError("give exactly one of --instance or --gen")
        if self.gen not in (None, "chain5", "chain7", "loop"):
            raise UsageError(f"unknown generator {self.gen!r}")
        if self.driver not in ("X", "XX"):
            raise UsageError("--driver must be X or XX")
        if not self.alpha > 0:
            raise UsageError("--alpha must be positive")
        try:
            default_grid(self.grid_step)
        except ValueError as exc:
            raise UsageError(f"--grid-step: {exc}") from None
        if self.grid_step > 0.1:
            raise UsageError("--grid-step must be at most 0.1")
        if self.k < 2:
            raise UsageError("--k must be at least 2")
        if not 0 <= self.gamma <= self.gamma_prime < 1:
            raise UsageError("need 0 <= gamma <= gamma_prime < 1")
        if self.epsilon < 0:
            raise UsageError("--epsilon must be non-negative")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if self.penalty is not None and not self.penalty > 0:
            raise UsageError("--penalty must be positive")

    def load(self) -> WeightedGraph | IsingModel:
        try:
            if self.instance is not None:
                inst = load_instance(self.instance)
            else:
                inst = generate(self.gen, self.w4, self.n, self.R, self.normalize)
            if isinstance(inst, WeightedGraph) and self.penalty is not None:
                inst = inst.with_penalties(self.penalty)
            if isinstance(inst, IsingModel) and self.penalty is not None:
                raise UsageError("--penalty applies to graph instances only")
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot load instance: {exc}") from None
        return inst

    def ising(self) -> IsingModel:
        try:
            return as_ising(self.load())
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def driver_spec(self, ising: IsingModel) -> DriverSpec:
        if self.driver == "X":
            return DriverSpec.x()
        if self.xx_edges == "same-as-problem":
            edges = list(ising.edges)
        else:
            try:
                edges = [tuple(int(v) for v in e.split("-")) for e in self.xx_edges.split(",") if e]
            except ValueError:
                raise UsageError("--xx-edges must look like 0-1,1-2") from None
        if any(len(e) != 2 or max(e) >= ising.n for e in edges):
            raise UsageError("--xx-edges out of range")
        return DriverSpec.xx(edges, self.xx_lambda)

    def output(self) -> Path:
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir


def generate(name: str, w4: float = 1.49, n: int = 4, R: float = 4.0, normalize: bool = False):
    if name == "chain5":
        return gen_chain5(w4)
    if name == "chain7":
        return gen_chain7()
    if name == "loop":
        return gen_loop_gadget(n, R, normalize)
    raise UsageError(f"unknown generator {name!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_generate(ns) -> int:
    try:
        inst = generate(ns.name, ns.w4, ns.n, ns.R, ns.normalize)
        if ns.penalty is not None:
            if not isinstance(inst, WeightedGraph):
                raise UsageError("--penalty applies to graph generators only")
            inst = inst.with_penalties(ns.penalty)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(ns.out) if ns.out else default_output_dir() / f"{ns.name}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps(instance_to_json(inst)))
    print(out)
    return EXIT_OK


def _analysis(cfg: RunConfig):
    ising = cfg.ising()
    driver = cfg.driver_spec(ising)
    a = analyze(
        ising, driver, cfg.alpha, step=cfg.grid_step, k=cfg.k,
        gamma=cfg.gamma, epsilon=cfg.epsilon, gamma_prime=cfg.gamma_prime,
        workers=cfg.workers, seed=cfg.seed,
    )
    return ising, driver, a


def cmd_sweep(ns) -> int:
    cfg = RunConfig.from_args(ns)
    ising, driver, a = _analysis(cfg)
    out = cfg.output()
    a.sweep.to_csv(out / "sweep.csv")
    a.traces.to_csv(out / "traces.csv")
    summary = a.summary()
    if cfg.alpha != 1.0:
        rep = min_gap_scale_report(SystemHamiltonian(ising, driver), cfg.alpha, grid=default_grid(cfg.grid_step))
        summary["scaling"] = rep.to_json()
    write_json(out / "summary.json", summary)
    print(f"s*={a.min_gap.s_star:.6g} min_gap={a.min_gap.min_gap:.6g} -> {out}")
    return EXIT_OK


def cmd_detect(ns) -> int:
    cfg = RunConfig.from_args(ns)
    _, _, a = _analysis(cfg)
    out = cfg.output()
    doc = a.report.to_json()
    h = cfg.grid_step
    try:
        fit = hyperbola_fit(a.sweep, a.min_gap.s_star, max(10 * h, 3.5 * h))
        doc["hyperbola"] = {"ok": True, **fit.__dict__}
    except (HyperbolaFitError, ValueError) as exc:
        doc["hyperbola"] = {"ok": False, "diagnostic": str(exc)}
    write_json(out / "detect.json", doc)
    a.traces.to_csv(out / "traces.csv")
    print(f"verdict={a.report.verdict} s*={a.min_gap.s_star:.6g} min_gap={a.min_gap.min_gap:.6g} -> {out}")
    return EXIT_OK


def cmd_lens(ns) -> int:
    cfg = RunConfig.from_args(ns)
    ising = cfg.ising()
    driver = cfg.driver_spec(ising)
    try:
        p = predict(ising, driver, Cutoff(cfg.rank_cut, cfg.lens_window))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = cfg.output()
    write_json(out / "lens.json", p.to_json())
    rows = spectrum_table(ising, driver)
    with open(out / "levels.csv", "w") as fh:
        fh.write("level,bits,energy,gs_neighbor,fs_neighbor\n")
        for r in rows:
            fh.write(f"{r['level']},{r['bits']},{r['energy']:.17g},{int(r['gs_neighbor'])},{int(r['fs_neighbor'])}\n")
    print(f"prediction={p.outcome} -> {out}")
    return EXIT_OK


def cmd_reduce(ns) -> int:
    cfg = RunConfig.from_args(ns)
    ising = cfg.ising()
    try:
        cg, rep = reduce_and_verify(ising)
    except ReductionError as exc:
        raise TheoremViolation(str(exc), {"error": str(exc)}) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = cfg.output()
    write_json(out / "reduce.json", rep.to_json())
    write_json(out / "conflict.json", cg.to_json())
    (out / "conflict.dot").write_text(cg.to_dot())
    print(f"{rep.n_terms} vertices, mis={rep.mis_weight:g}, verified -> {out}")
    return EXIT_OK


def cmd_scalecheck(ns) -> int:
    cfg = RunConfig.from_args(ns)
    ising = cfg.ising()
    sysh = SystemHamiltonian(ising, cfg.driver_spec(ising))
    if cfg.alpha == 1.0:
        raise UsageError("scalecheck needs --alpha different from 1")
    rep = min_gap_scale_report(sysh, cfg.alpha, grid=default_grid(cfg.grid_step))
    doc = rep.to_json()
    rng = np.random.default_rng(cfg.seed)
    checks = []
    for t in sorted(rng.uniform(0.0, 1.0, 5).tolist()):
        res, mis = eigen_scaling_check(sysh, cfg.alpha, t, k=min(4, sysh.dim - 1))
        checks.append({"t": t, "eigen_residual": res, "vector_misalignment": mis})
    doc["eigen_scaling"] = checks
    out = cfg.output()
    write_json(out / "scaling.json", doc)
    print(f"factor={rep.factor:.6g} predicted={rep.predicted_factor:.6g} passed={rep.passed} -> {out}")
    if not rep.passed:
        raise TheoremViolation("scaling claims failed: " + ", ".join(k for k, v in rep.checks.items() if not v), doc)
    return EXIT_OK


def cmd_reproduce(ns) -> int:
    if ns.figure not in FIGURES:
        raise UsageError(f"unknown figure id {ns.figure!r}; available: {', '.join(FIGURES)}")
    if ns.workers < 1:
        raise UsageError("--workers must be at least 1")
    out = Path(ns.out_dir) if ns.out_dir else default_output_dir()
    doc = reproduce(ns.figure, out, ns.workers, ns.seed)
    for c in doc["comparisons"]:
        print(f"{'ok  ' if c['ok'] else 'FAIL'} {c['quantity']}: {c['computed']} vs {c['reference']}")
    print(f"{ns.figure}: {'all comparisons ok' if doc['passed'] else 'some comparisons differ'} -> {out / ns.figure}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _instance_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--instance", help="instance JSON file")
    g.add_argument("--gen", choices=["chain5", "chain7", "loop"], help="built-in generator")
    g.add_argument("--w4", type=float, help="chain5 weight of vertex 4 (default 1.49)")
    g.add_argument("--n", type=int, help="loop size (default 4)")
    g.add_argument("--R", type=float, help="loop strength (default 4)")
    g.add_argument("--normalize", action="store_true", default=None, help="divide the loop model by R")
    g.add_argument("--penalty", type=float, help="uniform edge penalty J for graph instances")
    d = p.add_argument_group("driver")
    d.add_argument("--driver", choices=["X", "XX"])
    d.add_argument("--xx-lambda", type=float, help="signed XX coefficient (default -1, stoquastic)")
    d.add_argument("--xx-edges", help="'same-as-problem' (default) or e.g. 0-1,1-2")
    r = p.add_argument_group("run")
    r.add_argument("--alpha", type=float, help="problem scale factor (default 1)")
    r.add_argument("--grid-step", type=float, help="s-grid step (default 0.001)")
    r.add_argument("--k", type=int, help="eigenpairs per grid point (default 5)")
    r.add_argument("--gamma", type=float)
    r.add_argument("--epsilon", type=float)
    r.add_argument("--gamma-prime", type=float)
    r.add_argument("--rank-cut", type=int, help="LENS level cutoff (default 8)")
    r.add_argument("--lens-window", type=float, help="LENS energy window above E_1 (overrides --rank-cut)")
    r.add_argument("--out-dir", help=f"output directory (default ${ENV_OUTPUT_DIR} or ./qagap-out)")
    r.add_argument("--workers", type=int)
    r.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qagap", description="Spectral-gap and anti-crossing analysis for annealing Hamiltonians")
    p.add_argument("--version", action="version", version=f"qagap {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a built-in instance as JSON")
    g.add_argument("name", choices=["chain5", "chain7", "loop"])
    g.add_argument("--w4", type=float, default=1.49)
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--R", type=float, default=4.0)
    g.add_argument("--normalize", action="store_true")
    g.add_argument("--penalty", type=float)
    g.add_argument("-o", "--out", help="output file (default <output dir>/<name>.json)")
    g.set_defaults(func=cmd_generate)

    for name, func, text in (
        ("sweep", cmd_sweep, "spectrum sweep, overlap traces and min-gap summary"),
        ("detect", cmd_detect, "anti-crossing verdict"),
        ("lens", cmd_lens, "LENS sets and prediction"),
        ("reduce", cmd_reduce, "Ising to MIS reduction with exhaustive verification"),
        ("scalecheck", cmd_scalecheck, "problem-scale theorem checks"),
    ):
        sp = sub.add_parser(name, help=text)
        _instance_args(sp)
        sp.set_defaults(func=func)

    r = sub.add_parser("reproduce", help="rerun a reference experiment")
    r.add_argument("figure", help=", ".join(FIGURES))
    r.add_argument("--out-dir")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_reproduce)
    return p


def _fail(code: int, kind: str, message: str, out_dir: Path | None, extra: dict | None = None) -> int:
    doc = {"schema_version": "1", "error": kind, "message": message, "exit_code": code}
    if extra:
        doc["details"] = extra
    sys.stderr.write(dumps(doc))
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            write_json(out_dir / "error.json", doc)
        except OSError:
            pass
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    out_dir = Path(ns.out_dir) if getattr(ns, "out_dir", None) else None
    try:
        return ns.func(ns)
    except UsageError as exc:
        sys.stderr.write(f"qagap: error: {exc}\n")
        return EXIT_USAGE
    except (EigensolverError, DetectionError, np.linalg.LinAlgError) as exc:
        extra = {"s": getattr(exc, "s", None), "residuals": getattr(exc, "residuals", None)}
        return _fail(EXIT_NUMERICAL, "numerical", str(exc), out_dir, extra)
    except TheoremViolation as exc:
        return _fail(EXIT_THEOREM, "theorem-violation", str(exc), out_dir, exc.report)


if __name__ == "__main__":
    sys.exit(main())
