"""Command-line front end: ``monopush {classify,density,volume,compare,assemble}``.

Exit codes: 0 success, 1 statistical or validation failure, 2 usage or
precondition error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import box_calculus as bc
from . import monomial_core as mc
from . import oracle
from .errors import DomainError, EvaluationError
from .exponents import ExponentData

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    log: bool = False

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise UsageError(f"grid '{text}' is not start:stop:count[:log]")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"grid '{text}' has a non-numeric field") from None
        if count < 1:
            raise UsageError("grid count must be positive")
        if count > 1 and not start < stop:
            raise UsageError("grid needs start < stop")
        log = len(parts) == 4
        if log and start <= 0:
            raise UsageError("log grid needs start > 0")
        return cls(start, stop, count, log)

    def points(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        if self.log:
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    command: str
    exponents: ExponentData | None = None
    grid: np.ndarray | None = None
    signed: bool = False
    samples: int | None = None
    seed: int | None = None
    bins: int | None = None
    atoms: Path | None = None
    profile: Path | None = None
    mode: str = "mc"
    log_bins: bool = False
    workers: int = 1
    out: Path | None = None
    fmt: str = "csv"
    plot: bool = False

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        exponents = None
        if getattr(ns, "A", None) is not None or getattr(ns, "B", None) is not None:
            if ns.A is None or ns.B is None:
                raise UsageError("--A and --B go together")
            exponents = ExponentData.parse(ns.A, ns.B)
        grid = None
        q = getattr(ns, "q", None)
        grid_text = getattr(ns, "grid", None)
        if q is not None and grid_text is not None:
            raise UsageError("give either --q or --grid, not both")
        if q is not None:
            grid = np.array([q], dtype=float)
        elif grid_text is not None:
            grid = GridSpec.parse(grid_text).points()
        return cls(
            command=ns.command,
            exponents=exponents,
            grid=grid,
            signed=getattr(ns, "signed", False),
            samples=getattr(ns, "samples", None),
            seed=getattr(ns, "seed", None),
            bins=getattr(ns, "bins", None),
            atoms=Path(ns.atoms) if getattr(ns, "atoms", None) else None,
            profile=Path(ns.profile) if getattr(ns, "profile", None) else None,
            mode=getattr(ns, "mode", "mc"),
            log_bins=getattr(ns, "log_bins", False),
            workers=getattr(ns, "workers", 1),
            out=Path(ns.out) if getattr(ns, "out", None) else None,
            fmt=getattr(ns, "format", "csv"),
            plot=getattr(ns, "plot", False),
        )

    def need_exponents(self) -> ExponentData:
        if self.exponents is None:
            raise UsageError(f"{self.command} needs --A and --B")
        return self.exponents

    def need_grid(self) -> np.ndarray:
        if self.grid is None:
            raise UsageError(f"{self.command} needs --q or --grid")
        return self.grid


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _plot_script(csv_path: Path, title: str) -> str:
    png = csv_path.with_suffix(".png")
    return (
        "import csv\n\n"
        "import matplotlib\n"
        'matplotlib.use("Agg")\n'
        "import matplotlib.pyplot as plt\n\n"
        f"with open({str(csv_path)!r}) as fh:\n"
        "    rows = list(csv.DictReader(fh))\n"
        'q = [float(r["q"]) for r in rows]\n'
        'density = [float(r["density"]) for r in rows]\n'
        "fig, ax = plt.subplots(figsize=(6, 4))\n"
        'ax.plot(q, density, marker=".")\n'
        'ax.set_xlabel("q")\n'
        'ax.set_ylabel("density")\n'
        f"ax.set_title({title!r})\n"
        "fig.tight_layout()\n"
        f"fig.savefig({str(png)!r}, dpi=150)\n"
    )


def _write_profile(prof: bc.DensityProfile, cfg: RunConfig, title: str):
    text = prof.to_json() if cfg.fmt == "json" else prof.to_csv()
    _emit(text, cfg.out)
    if cfg.plot:
        if cfg.out is None or cfg.fmt != "csv":
            raise UsageError("--plot needs --out with csv format")
        cfg.out.with_suffix(".plot.py").write_text(_plot_script(cfg.out, title))


def cmd_classify(cfg: RunConfig) -> int:
    e = cfg.need_exponents()
    rec = mc.classify(e).as_record()
    if rec["frs_case"] == mc.FRSCase.OUTSIDE.value:
        rec["warning"] = "neither admissible exponent case holds; the limit may be infinite"
    if cfg.fmt == "json":
        text = json.dumps(rec) + "\n"
    else:
        keys = list(rec)
        row = [";".join(map(repr, v)) if isinstance(v, list) else "" if v is None else str(v) for v in rec.values()]
        text = ",".join(keys) + "\n" + ",".join(row) + "\n"
    _emit(text, cfg.out)
    return EXIT_OK


def _density_profile(e: ExponentData, grid: np.ndarray, signed: bool) -> bc.DensityProfile:
    if signed:
        if np.any(np.abs(grid) >= 1):
            raise DomainError("signed density grid must lie in (-1, 1)")
        values, paths = mc.density_signed_cube_with_path(e, grid)
    else:
        if np.any((grid < 0) | (grid >= 1)):
            raise DomainError("unit-cube density grid must lie in [0, 1)")
        values, paths = mc.density_unit_interval_with_path(e, grid)
    return bc.DensityProfile(grid, np.atleast_1d(values), list(np.atleast_1d(paths)))


def cmd_density(cfg: RunConfig) -> int:
    e = cfg.need_exponents()
    prof = _density_profile(e, cfg.need_grid(), cfg.signed)
    _write_profile(prof, cfg, f"A={e.A} B={e.B}")
    return EXIT_OK


def cmd_volume(cfg: RunConfig) -> int:
    e = cfg.need_exponents()
    grid = cfg.need_grid()
    values, paths = mc.volume_with_path(e, grid)
    values, paths = np.atleast_1d(values), np.atleast_1d(paths)
    if cfg.fmt == "json":
        rows = [{"q": float(q), "volume": float(v), "path": str(p)} for q, v, p in zip(grid, values, paths)]
        text = json.dumps(rows, indent=1) + "\n"
    else:
        text = "q,volume,path\n" + "".join(f"{float(q)!r},{float(v)!r},{p}\n" for q, v, p in zip(grid, values, paths))
    _emit(text, cfg.out)
    return EXIT_OK


def _model_atoms(e: ExponentData, signed: bool) -> bc.AtomSet:
    lo = -1.0 if signed else 0.0
    return bc.AtomSet((bc.BoxAtom(1.0, bc.Box(((lo, 1.0),) * e.n), e),))


def _compare_quadrature(cfg: RunConfig, e: ExponentData) -> int:
    grid = cfg.grid if cfg.grid is not None else np.linspace(0.05, 0.95, 19)
    rows = []
    for q in grid:
        res = oracle.quadrature_volume(e, float(q))
        closed = mc.volume(e, float(q))
        rows.append({"q": float(q), "closed": closed, "quadrature": res.value, "error": res.error,
                     "ok": abs(closed - res.value) <= res.error})
    passed = all(r["ok"] for r in rows)
    _emit(json.dumps({"mode": "quadrature", "passed": passed, "points": rows}, indent=1) + "\n", cfg.out)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_compare(cfg: RunConfig) -> int:
    e = cfg.need_exponents()
    if cfg.mode == "quadrature":
        return _compare_quadrature(cfg, e)
    if cfg.samples is None or cfg.seed is None or cfg.bins is None:
        raise UsageError("compare needs --samples, --seed and --bins")
    atoms = _model_atoms(e, cfg.signed)
    est = oracle.mc_histogram(atoms, cfg.samples, cfg.seed, cfg.bins, log_bins=cfg.log_bins,
                              workers=cfg.workers)
    if cfg.profile is not None:
        try:
            prof = bc.DensityProfile.from_csv(cfg.profile.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read profile: {exc}") from None
        source = str(cfg.profile)
    else:
        prof = bc.assemble_bin_average(atoms, est.bin_edges)
        source = "closed-form bin averages"
    report = oracle.compare(prof, est)
    rec = {"mode": "mc", "profile": source, "samples": est.samples, "seed": est.seed, **report.as_record()}
    _emit(json.dumps(rec) + "\n", cfg.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_assemble(cfg: RunConfig) -> int:
    if cfg.atoms is None:
        raise UsageError("assemble needs --atoms")
    try:
        atoms = bc.load_atoms(cfg.atoms)
    except OSError as exc:
        raise UsageError(f"cannot read atoms file: {exc}") from None
    A = atoms.shared_A()
    prof = bc.assemble_density(atoms, cfg.need_grid())
    _write_profile(prof, cfg, f"{len(atoms)} atoms, A={A}")
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "density": cmd_density,
    "volume": cmd_volume,
    "compare": cmd_compare,
    "assemble": cmd_assemble,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monopush", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def exps(p):
        p.add_argument("--A", help="map exponents, comma separated")
        p.add_argument("--B", help="measure exponents, comma separated")

    def where(p):
        p.add_argument("--q", type=float)
        p.add_argument("--grid", help="start:stop:count or start:stop:count:log")

    def output(p, plot=False):
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if plot:
            p.add_argument("--plot", action="store_true", help="also write <out>.plot.py")

    p = sub.add_parser("classify", help="admissible case, parity and limit at 0")
    exps(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("density", help="density profile on a grid")
    exps(p)
    where(p)
    p.add_argument("--signed", action="store_true", help="use [-1, 1]^n instead of [0, 1]^n")
    output(p, plot=True)

    p = sub.add_parser("volume", help="volume function V(q)")
    exps(p)
    where(p)
    output(p)

    p = sub.add_parser("compare", help="closed form against an independent oracle")
    exps(p)
    where(p)
    p.add_argument("--signed", action="store_true")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--log-bins", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--profile", help="profile CSV to test instead of the closed form")
    p.add_argument("--mode", choices=("mc", "quadrature"), default="mc")
    p.add_argument("--out")

    p = sub.add_parser("assemble", help="density of a signed combination of box atoms")
    p.add_argument("--atoms", required=True, help="JSON array or JSON-lines atom file")
    where(p)
    output(p, plot=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        print(f"monopush {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvaluationError as exc:
        print(f"monopush {ns.command}: evaluation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
