"""Command-line entry point: ``pfc kernels|verify|converge|simulate``."""
from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path

from .harness.config import ConfigError, load_config
from .kernels import InvalidOrderError, bdf_kernels, doc_kernels_exact
from .solver import SolverConfig, SolverError, TimeStepWarning

# Hard defaults for the options a config file may set; explicit flags win over the file.
SIM_DEFAULTS = {"k": 5, "eps": 0.25, "tau": 0.1, "T": None, "grid": None, "domain": None,
                "seed": 0, "out": None, "strict": False, "dealias": False, "full_scale": False,
                "snapshots": None}
CONV_DEFAULTS = {"k": [3, 4, 5], "N": [10, 20, 40, 80, 160], "eps": 0.02, "T": 1.0,
                 "grid": [128, 128], "domain": [8.0, 8.0], "dealias": False, "workers": 1, "out": None}

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(key: str, raw: str, like):
    try:
        if isinstance(like, bool):
            return _BOOL[raw.strip().lower()]
        if key in ("grid", "k", "N") and (isinstance(like, list) or key == "grid"):
            return [int(x) for x in raw.replace(",", " ").split()]
        if key in ("domain", "snapshots"):
            return [float(x) for x in raw.replace(",", " ").split()]
        if key in ("k", "seed", "workers"):
            return int(raw)
        if key == "out":
            return raw
        return float(raw)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """Hard defaults, then the config file, then flags given on the command line."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        for key, raw in load_config(args.config).items():
            if key not in defaults:
                raise ConfigError(f"{args.config}: unknown key {key!r}")
            merged[key] = _coerce(key, raw, defaults[key])
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            merged[key] = val
    return merged


def _fmt_frac(x) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def cmd_kernels(args) -> int:
    kern = bdf_kernels(args.k)
    print(f"BDF-{args.k} kernels b_0..b_{args.k - 1}")
    for j, b in enumerate(kern.b):
        print(f"  b_{j} = {_fmt_frac(b):>12}  {float(b):.17g}")
    if args.doc:
        print(f"DOC-{args.k} kernels theta_0..theta_{args.doc - 1}")
        for j, th in enumerate(doc_kernels_exact(args.k, args.doc)):
            print(f"  theta_{j} = {_fmt_frac(th)}  {float(th):.17g}")
    return 0


def cmd_verify(args) -> int:
    from .harness.verify import SUITES, eig_csv, eig_table, verify_all

    suites = tuple(SUITES) if args.suite == "all" else (args.suite,)
    opts: dict[str, dict] = {}
    if args.trials is not None:
        opts["gradient"] = {"trials": args.trials}
        opts["young"] = {"trials": args.trials}
    if args.len is not None:
        opts.setdefault("gradient", {})["length"] = args.len
    if args.max_n is not None:
        opts["bdf6"] = {"max_n": args.max_n}
    if args.m is not None:
        opts["eigs"] = {"size": args.m}
    report = verify_all(tol_scale=args.tol_scale, seed=args.seed, suites=suites, options=opts)
    print(report.text())
    if "eigs" in suites:
        table = eig_csv(eig_table(sizes=(args.m or 300,)))
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "eigs.csv").write_text(table)
        else:
            print(table, end="")
    return 0 if report.passed else 1


def cmd_converge(args) -> int:
    from .harness.experiments import convergence_study, format_convergence
    from .harness.io import write_csv

    o = _merge(args, CONV_DEFAULTS)
    rows = convergence_study(o["k"], o["N"], grid_shape=tuple(o["grid"]), domain=tuple(o["domain"]),
                             epsilon=o["eps"], T=o["T"], dealias=o["dealias"], workers=o["workers"])
    print(format_convergence(rows))
    if o["out"]:
        out = Path(o["out"])
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "convergence.csv",
                  [(r.k, r.N, r.tau, r.error, r.error_l2, r.order) for r in rows],
                  columns=("k", "N", "tau", "error", "error_l2", "order"))
    return 0


def cmd_simulate(args) -> int:
    from .harness.experiments import REFERENCE_SNAPSHOT_TIMES, crystal_growth, desk_setup
    from .spectral import Grid2D

    o = _merge(args, SIM_DEFAULTS)
    grid, spec, _, T = desk_setup(k=o["k"], seed=o["seed"], full_scale=o["full_scale"])
    if o["domain"] is not None or o["grid"] is not None:
        lx, ly = o["domain"] if o["domain"] is not None else (grid.lx, grid.ly)
        nx, ny = o["grid"] if o["grid"] is not None else grid.shape
        # Patch layout is defined on a 256-wide box; rescale to the requested domain.
        spec = type(spec)(seed=o["seed"]).scaled(lx / 256.0)
        grid = Grid2D(int(nx), int(ny), float(lx), float(ly))
    if o["T"] is not None:
        T = float(o["T"])
    cfg = SolverConfig(k=o["k"], epsilon=o["eps"], tau=o["tau"], startup="bootstrap",
                       dealias=o["dealias"], strict=o["strict"])
    if o["snapshots"] is not None:
        snaps = tuple(o["snapshots"])
    else:
        snaps = tuple(t for t in REFERENCE_SNAPSHOT_TIMES if t <= T)
        if T not in snaps:
            snaps += (T,)
    t0 = time.perf_counter()
    res = crystal_growth(spec, cfg, grid=grid, T=T, snapshot_times=snaps, out_dir=o["out"])
    traj = res.trajectory
    print(f"BDF-{cfg.k} on {grid.nx}x{grid.ny} over (0,{grid.lx:g})x(0,{grid.ly:g}), "
          f"eps={cfg.epsilon}, tau={cfg.tau}, T={T}, {len(traj.steps) - 1} steps "
          f"in {time.perf_counter() - t0:.1f} s")
    print(f"energy {traj.energy[0]:.10g} -> {traj.energy[-1]:.10g}; "
          f"volume drift {max(abs(v - traj.volume[0]) for v in traj.volume):.3e}")
    for f in res.files:
        print(f"wrote {f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfc", description="BDF-k phase field crystal toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    pk = sub.add_parser("kernels", help="print BDF-k and DOC-k kernels")
    pk.add_argument("--k", type=int, required=True)
    pk.add_argument("--doc", type=int, metavar="M", help="also print the first M DOC kernels")
    pk.set_defaults(func=cmd_kernels)

    pv = sub.add_parser("verify", help="run property suites")
    pv.add_argument("suite", choices=["all", "kernels", "gradient", "bdf6", "eigs", "young", "spectral"])
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--tol-scale", type=float, default=1.0)
    pv.add_argument("--trials", type=int)
    pv.add_argument("--len", type=int)
    pv.add_argument("--max-n", type=int)
    pv.add_argument("--m", type=int, help="matrix order for the eigenvalue suite")
    pv.add_argument("--out", help="directory for eigs.csv")
    pv.set_defaults(func=cmd_verify)

    pc = sub.add_parser("converge", help="temporal convergence study on the manufactured solution")
    pc.add_argument("--k", type=int, nargs="+")
    pc.add_argument("--N", type=int, nargs="+")
    pc.add_argument("--eps", type=float)
    pc.add_argument("--T", type=float)
    pc.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"))
    pc.add_argument("--domain", type=float, nargs=2, metavar=("LX", "LY"))
    pc.add_argument("--dealias", action="store_true")
    pc.add_argument("--workers", type=int)
    pc.add_argument("--out")
    pc.add_argument("--config")
    pc.set_defaults(func=cmd_converge)

    ps = sub.add_parser("simulate", help="crystal growth from seeded nucleation patches")
    ps.add_argument("--k", type=int)
    ps.add_argument("--eps", type=float)
    ps.add_argument("--tau", type=float)
    ps.add_argument("--T", type=float)
    ps.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"))
    ps.add_argument("--domain", type=float, nargs=2, metavar=("LX", "LY"))
    ps.add_argument("--seed", type=int)
    ps.add_argument("--out")
    ps.add_argument("--strict", action="store_true")
    ps.add_argument("--dealias", action="store_true")
    ps.add_argument("--full-scale", action="store_true")
    ps.add_argument("--snapshots", type=float, nargs="*")
    ps.add_argument("--config")
    ps.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", TimeStepWarning)
            return args.func(args)
    except (ConfigError, InvalidOrderError, SolverError, ValueError, OSError) as exc:
        print(f"pfc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
