"""Command-line interface: ``blockdiff {solve,compare,generate,pixelate,render}``.

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, fvm_solver, geometry, grid as gridmod, sa_solver

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3


# --- result document --------------------------------------------------------

def _dump(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_dump(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump(v) for v in obj) + "]"
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("non-finite number in result")
        return format(v, ".17g")
    return json.dumps(obj.item() if isinstance(obj, np.generic) else obj)


@dataclass(frozen=True)
class ResultDocument:
    method: str
    params: dict
    tensor: list
    eigenvalues: list
    angle_deg: float
    residual_norm: dict
    grid_sha256: str
    wall_time_s: float | None = None

    @classmethod
    def build(cls, result: sa_solver.EffectiveTensor, params: dict, grid_digest: str,
              timing: bool = True) -> ResultDocument:
        pd = analysis.principal_directions(result.tensor)
        return cls(result.method, dict(params),
                   [[float(v) for v in row] for row in result.tensor],
                   [float(v) for v in pd.eigenvalues], pd.angle_deg,
                   {"x": float(result.residual_norm_x), "y": float(result.residual_norm_y)},
                   grid_digest, float(result.wall_time) if timing else None)

    def to_dict(self) -> dict:
        doc = {"method": self.method, "params": self.params, "tensor": self.tensor,
               "eigenvalues": self.eigenvalues, "angle_deg": self.angle_deg,
               "residual_norm": self.residual_norm}
        if self.wall_time_s is not None:
            doc["wall_time_s"] = self.wall_time_s
        doc["grid_sha256"] = self.grid_sha256
        return doc

    def to_json(self) -> str:
        return _dump(self.to_dict()) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ResultDocument:
        d = json.loads(text)
        return cls(d["method"], d["params"], d["tensor"], d["eigenvalues"], d["angle_deg"],
                   d["residual_norm"], d["grid_sha256"], d.get("wall_time_s"))

    def to_csv(self) -> str:
        row = {"method": self.method, **{f"param_{k}": v for k, v in self.params.items()},
               "D11": self.tensor[0][0], "D12": self.tensor[0][1],
               "D21": self.tensor[1][0], "D22": self.tensor[1][1],
               "lambda1": self.eigenvalues[0], "lambda2": self.eigenvalues[1],
               "angle_deg": self.angle_deg, "residual_x": self.residual_norm["x"],
               "residual_y": self.residual_norm["y"]}
        if self.wall_time_s is not None:
            row["wall_time_s"] = self.wall_time_s
        row["grid_sha256"] = self.grid_sha256
        return _csv_table([row])


def _csv_table(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (format(float(v), ".17g") if isinstance(v, (float, np.floating)) else
                             ("" if v is None else v)) for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str | bytes, out: str | None) -> None:
    if out is None or out == "-":
        if isinstance(text, bytes):
            sys.stdout.buffer.write(text)
            sys.stdout.buffer.flush()
        else:
            sys.stdout.write(text)
        return
    path = Path(out)
    if isinstance(text, bytes):
        path.write_bytes(text)
    else:
        path.write_text(text)


# --- commands ---------------------------------------------------------------

def _neig(value: str) -> str | int:
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--neig must be 'auto' or an integer") from None


def cmd_solve(args) -> int:
    grid = gridmod.load(args.grid)
    if args.method == "sa":
        ny = args.nx if args.ny is None else args.ny
        neig = sa_solver.default_neig(args.nx, ny) if args.neig == "auto" else args.neig
        params = sa_solver.SolverParams(args.nx, ny, neig)
        result = sa_solver.compute(grid, params)
        pdict = {"N_x": params.N_x, "N_y": params.N_y, "N_eig": params.N_eig}
    else:
        nfy = args.nf if args.nf_y is None else args.nf_y
        result = fvm_solver.compute_fvm(grid, args.nf, nfy)
        pdict = {"N_F_x": args.nf, "N_F_y": nfy}
    doc = ResultDocument.build(result, pdict, grid.digest(), timing=not args.no_timing)
    _emit(doc.to_json() if args.format == "json" else doc.to_csv(), args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    source = args.grid
    case = source.upper() if source.upper() in analysis.DEFAULT_RESOLUTIONS else None
    target = case if case and not Path(source).exists() else gridmod.load(source)
    study = analysis.convergence_study(target, args.nx or None, args.benchmark_nf,
                                       neig_cap=args.neig_cap, repeats=args.repeats)
    rows = [r.as_dict() for r in study.rows]
    if args.no_timing:
        for r in rows:
            r.pop("wall_time_s")
    _emit(_csv_table(rows), args.output)
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.kind == "checkerboard":
        grid = geometry.checkerboard(args.m, args.low, args.high)
    elif args.kind == "aggregate":
        grid = geometry.aggregate_random(geometry.AggregationConfig(
            args.m, args.iters, args.seed, args.low, args.high))
    elif args.kind == "layout":
        grid = geometry.case_layout(args.m)
    else:
        grid = geometry.convergence_case(args.name)
    _write_grid(grid, args.output)
    return EXIT_OK


def _write_grid(grid, output: str | None) -> None:
    if output and output != "-":
        gridmod.save(grid, output)
    else:
        _emit(gridmod.to_csv(grid), None)


def cmd_pixelate(args) -> int:
    grid = gridmod.load(args.grid)
    coarse = geometry.pixelate(grid, args.r, args.threshold, args.low, args.high)
    _write_grid(coarse, args.output)
    return EXIT_OK


def render_pgm(grid: gridmod.BlockGrid, scale: int = 1) -> bytes:
    """Binary PGM, one ``scale`` x ``scale`` square per block, row 1 on top.

    Grey level is ``round(255 D / max D)``, so a two-phase 0.1 / 1 medium
    renders as 26 / 255 and lower diffusivity is darker.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    levels = np.floor(255.0 * grid.D / grid.D.max() + 0.5).astype(np.uint8)
    img = np.kron(levels, np.ones((scale, scale), np.uint8))
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    return header + img.tobytes()


def cmd_render(args) -> int:
    grid = gridmod.load(args.grid)
    _emit(render_pgm(grid, args.scale), args.output)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockdiff",
                                description="Effective diffusivity of periodic block media.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute the effective diffusivity tensor")
    s.add_argument("grid", help="grid file (.json or CSV)")
    s.add_argument("--method", choices=("sa", "fvm"), default="sa")
    s.add_argument("--nx", type=int, default=16, help="abscissas per block side along x")
    s.add_argument("--ny", type=int, default=None, help="abscissas per block side along y")
    s.add_argument("--neig", type=_neig, default="auto", help="series order or 'auto'")
    s.add_argument("--nf", type=int, default=64, help="finite volume nodes along x")
    s.add_argument("--nf-y", type=int, default=None, help="finite volume nodes along y")
    s.add_argument("--out", dest="format", choices=("json", "csv"), default="json")
    s.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    s.add_argument("--no-timing", action="store_true", help="omit wall time")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="convergence study against the fine-mesh benchmark")
    c.add_argument("grid", help="grid file or one of the case letters A-D")
    c.add_argument("--nx", type=int, nargs="*", default=None, help="abscissa counts to study")
    c.add_argument("--benchmark-nf", type=int, default=analysis.BENCHMARK_NF)
    c.add_argument("--neig-cap", type=int, default=None,
                   help="clip N_eig = 2N-3 to this value")
    c.add_argument("--repeats", type=int, default=1, help="timing repeats (median)")
    c.add_argument("-o", "--output", default=None)
    c.add_argument("--no-timing", action="store_true")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("generate", help="write a generated grid")
    g.add_argument("kind", choices=("checkerboard", "aggregate", "layout", "case"))
    g.add_argument("--m", type=int, default=8, help="grid size, or layout number 1-4")
    g.add_argument("--iters", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", default="A", help="case letter A-D for kind=case")
    g.add_argument("--low", type=float, default=geometry.LOW)
    g.add_argument("--high", type=float, default=geometry.HIGH)
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_generate)

    x = sub.add_parser("pixelate", help="coarsen a binary grid")
    x.add_argument("grid")
    x.add_argument("--r", type=int, required=True, help="coarse blocks per side")
    x.add_argument("--threshold", type=float, default=0.55)
    x.add_argument("--low", type=float, default=geometry.LOW)
    x.add_argument("--high", type=float, default=geometry.HIGH)
    x.add_argument("-o", "--output", default=None)
    x.set_defaults(func=cmd_pixelate)

    r = sub.add_parser("render", help="draw a grid as a binary PGM image")
    r.add_argument("grid")
    r.add_argument("--scale", type=int, default=1, help="pixels per block side")
    r.add_argument("-o", "--output", default=None)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except sa_solver.SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # GridError, ParameterError, MeshError and AnalysisError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
