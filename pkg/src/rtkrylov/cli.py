"""Experiment runner: single solves, spectra, clustering tables, convergence ladders.

Subcommands
    solve        one system, solution CSV + report JSON
    spectrum     eigenvalues CSV + clustering report JSON
    table        cluster fractions over a (ns, nomega, nnu) product grid, CSV
    convergence  residual histories along a refinement ladder, CSV

A JSON config file can supply any flag (underscored keys); explicit flags
win. Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path


from rtkrylov import presets
from rtkrylov.errors import DENSE_CAP_DEFAULT, ResourceLimitError
from rtkrylov.krylov import SolveConfig, solve_system
from rtkrylov.operator import apply_A, build_rhs
from rtkrylov.spectrum import compute_spectrum

SCHEMA_VERSION = 1
_G = "%.17g"


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    return _G % float(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _int_list(text) -> list:
    if isinstance(text, list):
        return [int(v) for v in text]
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtkrylov", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("solve", "spectrum", "table", "convergence"):
        p = sub.add_parser(mode)
        p.add_argument("--preset", choices=["mono", "coherent", "crd", "aniso2d"])
        p.add_argument("--ns", help="space nodes (comma list in table/convergence mode)")
        p.add_argument("--nomega", help="angular nodes (comma list in table mode)")
        p.add_argument("--nnu", help="frequency nodes (comma list in table/convergence mode)")
        p.add_argument("--nx", type=int, help="2D grid points in x")
        p.add_argument("--ny", type=int, help="2D grid points in y")
        p.add_argument("--solver", choices=["gmres", "bicgstab"])
        p.add_argument("--tol", type=float)
        p.add_argument("--restart", type=int)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--rhs-one", action="store_const", const=True, dest="rhs_one",
                       help="use the constant right-hand side of ones")
        p.add_argument("--gamma-scale", type=float, dest="gamma_scale")
        p.add_argument("--dense-cap", type=int, dest="dense_cap")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--threads", type=int)
    return parser


_DEFAULTS = {
    "preset": "mono",
    "ns": "10",
    "nomega": "12",
    "nnu": "10",
    "nx": 8,
    "ny": 8,
    "solver": "gmres",
    "tol": 1e-12,
    "restart": None,
    "max_iter": 500,
    "rhs_one": False,
    "gamma_scale": 1.0,
    "dense_cap": DENSE_CAP_DEFAULT,
    "out": ".",
    "threads": 1,
}


def _merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["mode"] = args.mode
    return cfg


def _problem_from(cfg: dict, n_space: int, n_omega: int, n_freq: int):
    return presets.build(
        cfg["preset"], n_space=n_space, n_angles=n_omega, n_freq=n_freq,
        n_x=cfg["nx"], n_y=cfg["ny"], gamma_scale=cfg["gamma_scale"],
    )


def _solve_config(cfg: dict) -> SolveConfig:
    return SolveConfig(method=cfg["solver"], rel_tol=cfg["tol"],
                       max_iter=cfg["max_iter"], restart=cfg["restart"])


def _scalar(cfg, key) -> int:
    values = _int_list(cfg[key])
    if len(values) != 1:
        raise ConfigError(f"--{key} must be a single value in {cfg['mode']} mode")
    return values[0]


def _echo_config(cfg: dict) -> dict:
    echo = {k: v for k, v in cfg.items() if k not in ("out", "threads", "mode", "_solver_given")}
    return echo


def _solution_rows(problem, solution):
    grid = problem.grid
    if hasattr(grid, "node_xy"):  # 2D
        header = ["x", "y", "mu", "nu", "I"]
        rows = []
        mat = solution.reshape(grid.n_space, grid.n_rays)
        for i, (x, y) in enumerate(grid.node_xy):
            for k in range(grid.n_rays):
                rows.append([_fmt(x), _fmt(y), _fmt(grid.ray_mu[k]),
                             _fmt(grid.ray_nu[k]), _fmt(mat[i, k])])
        return header, rows
    header = ["t", "mu", "nu", "I"]
    rows = []
    mat = solution.reshape(grid.n_space, grid.n_rays)
    for i, t in enumerate(grid.t_nodes):
        for k in range(grid.n_rays):
            rows.append([_fmt(t), _fmt(grid.ray_mu[k]), _fmt(grid.ray_nu[k]),
                         _fmt(mat[i, k])])
    return header, rows


def _run_solve(cfg: dict, out_dir: Path) -> int:
    problem = _problem_from(cfg, _scalar(cfg, "ns"), _scalar(cfg, "nomega"),
                            _scalar(cfg, "nnu"))
    b = build_rhs(problem, override_ones=cfg["rhs_one"])
    report = solve_system(lambda v: apply_A(problem, v), b, _solve_config(cfg))

    header, rows = _solution_rows(problem, report.solution)
    _write_csv(out_dir / "solution.csv", header, rows)
    _write_json(out_dir / "report.json", {
        "schema_version": SCHEMA_VERSION,
        "kind": "solve",
        "config": _echo_config(cfg),
        "method": report.method,
        "converged": bool(report.converged),
        "breakdown": bool(report.breakdown),
        "iterations": int(report.iterations),
        "true_residual": report.true_residual,
        "residual_history": [float(r) for r in report.residual_history],
    })
    if not report.converged:
        print("solve did not converge", file=sys.stderr)
        return 2
    return 0


def _run_spectrum(cfg: dict, out_dir: Path) -> int:
    problem = _problem_from(cfg, _scalar(cfg, "ns"), _scalar(cfg, "nomega"),
                            _scalar(cfg, "nnu"))
    rep = compute_spectrum(problem, dense_cap=cfg["dense_cap"])
    rows = [[_fmt(l.real), _fmt(l.imag), _fmt(abs(l))] for l in rep.eigenvalues]
    _write_csv(out_dir / "eigenvalues.csv", ["re", "im", "modulus"], rows)
    _write_json(out_dir / "spectrum.json", {
        "schema_version": SCHEMA_VERSION,
        "kind": "spectrum",
        "config": _echo_config(cfg),
        "n_total": rep.n,
        "cluster_fraction_symmetric": rep.cluster_fraction,
        "cluster_fraction_paper_interval": rep.cluster_fraction_one_sided,
        "min_modulus": rep.min_modulus,
        "outlier_counts": {str(k): v for k, v in rep.outlier_counts.items()},
    })
    return 0


def _run_table(cfg: dict, out_dir: Path) -> int:
    if cfg["preset"] == "aniso2d":
        raise ConfigError("table mode supports the 1D presets (mono, coherent, crd)")
    cells = [
        (ns, nom, nnu)
        for ns in _int_list(cfg["ns"])
        for nom in _int_list(cfg["nomega"])
        for nnu in (_int_list(cfg["nnu"]) if cfg["preset"] != "mono" else [1])
    ]

    def one_cell(cell):
        ns, nom, nnu = cell
        n = ns * nom * nnu
        if n > cfg["dense_cap"]:
            return None
        rep = compute_spectrum(_problem_from(cfg, ns, nom, nnu),
                               dense_cap=cfg["dense_cap"])
        return rep

    with ThreadPoolExecutor(max_workers=max(1, cfg["threads"])) as pool:
        reports = list(pool.map(one_cell, cells))

    rows = []
    for (ns, nom, nnu), rep in zip(cells, reports):
        if rep is None:
            print(f"skipping cell ns={ns} nomega={nom} nnu={nnu}: "
                  f"size {ns * nom * nnu} over dense cap {cfg['dense_cap']}",
                  file=sys.stderr)
            continue
        rows.append([str(ns), str(nom), str(nnu), str(rep.n),
                     _fmt(rep.cluster_fraction_one_sided),
                     _fmt(rep.cluster_fraction),
                     _fmt(rep.min_modulus)])
    _write_csv(out_dir / "table.csv",
               ["N_s", "N_Omega", "N_nu", "N",
                "cluster_fraction_paper_interval", "cluster_fraction_symmetric",
                "min_modulus"],
               rows)
    return 0


def _run_convergence(cfg: dict, out_dir: Path) -> int:
    ns_list = _int_list(cfg["ns"])
    nnu_list = _int_list(cfg["nnu"])
    if cfg["preset"] == "mono":
        nnu_list = [1] * len(ns_list)
    elif len(nnu_list) == 1:
        nnu_list = nnu_list * len(ns_list)
    if len(nnu_list) != len(ns_list):
        raise ConfigError("--nnu ladder must match --ns in length (or be scalar)")
    n_omega = _scalar(cfg, "nomega")
    methods = [cfg["solver"]] if cfg.get("_solver_given") else ["gmres", "bicgstab"]

    rows = []
    any_failed = False
    for ns, nnu in zip(ns_list, nnu_list):
        problem = _problem_from(cfg, ns, n_omega, nnu)
        b = build_rhs(problem, override_ones=cfg["rhs_one"])
        size = f"ns{ns}_nomega{n_omega}_nnu{nnu}"
        for method in methods:
            solver_cfg = SolveConfig(method=method, rel_tol=cfg["tol"],
                                     max_iter=cfg["max_iter"], restart=cfg["restart"])
            rep = solve_system(lambda v: apply_A(problem, v), b, solver_cfg)
            any_failed |= not rep.converged
            for it, res in enumerate(rep.residual_history, start=1):
                rows.append([size, method, str(it), _fmt(res),
                             str(int(rep.converged))])
    _write_csv(out_dir / "convergence.csv",
               ["size", "method", "iteration", "relative_residual", "converged"],
               rows)
    return 2 if any_failed else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.solver is not None:
            cfg["_solver_given"] = True
        out_dir = Path(cfg["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.mode == "solve":
            return _run_solve(cfg, out_dir)
        if args.mode == "spectrum":
            return _run_spectrum(cfg, out_dir)
        if args.mode == "table":
            return _run_table(cfg, out_dir)
        return _run_convergence(cfg, out_dir)
    except (ConfigError, ValueError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
