"""Config-driven command line front end.

Subcommands: build, verify, propagate, phase, sweep. All numeric output uses
17 significant digits so files round-trip doubles and runs are byte-identical
for identical configs. Exit codes: 0 success, 1 failed checks, 2 bad config
or bad loop geometry.

Time-function strings in config files follow the grammar documented in
:mod:`susyinv.timefunc` (constants, ``t``, ``pi``, ``sin``/``cos`` of affine
arguments, sums, differences, products).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .construction import run_prescription
from .dynamics import berry_holonomy, propagate
from .operators import eigh
from .suites import run_suites


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _complex_payload(m: np.ndarray) -> dict:
    return {"real": [[_fmt(v) for v in row] for row in m.real],
            "imag": [[_fmt(v) for v in row] for row in m.imag]}


def _setup(cfg: RunConfig, out_override: str | None):
    out_dir = Path(out_override or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rep = cfg.make_rep()
    d0 = cfg.d0_for(rep)
    from .construction import oscillator_supersystem, spin_supersystem
    if cfg.family == "spin":
        system = spin_supersystem(rep, cfg.theta, cfg.phi, cfg.f, cfg.g, b=cfg.b, d0=d0)
    else:
        system = oscillator_supersystem(rep, cfg.theta, cfg.phi, cfg.f, d0=d0)
    return out_dir, rep, run_prescription(system)


def cmd_build(cfg: RunConfig, out_override: str | None) -> int:
    """Write H_minus.csv, U_minus.json, invariant_spectrum.csv."""
    out_dir, rep, out = _setup(cfg, out_override)
    from .construction import closed_form_osc_R, closed_form_spin_R
    closed_form = closed_form_spin_R if cfg.family == "spin" else closed_form_osc_R

    grid = cfg.grid()
    if "csv" in cfg.formats:
        rows = []
        for t in grid:
            h = out.h_minus(t)
            r = closed_form(cfg.f, cfg.theta, cfg.phi, t)
            rows.append((t, r[0], r[1], r[2], h.hermiticity_defect()))
        _write_csv(out_dir / "H_minus.csv",
                   ["t", "R1", "R2", "R3", "hermiticity_defect"], rows)

        spec_rows = []
        for t in grid:
            values = eigh(out.i_minus(t)).values
            spec_rows.append((t, *values))
        _write_csv(out_dir / "invariant_spectrum.csv",
                   ["t"] + [f"lambda_{i}" for i in range(out.iminus_ref.dim)],
                   spec_rows)

    if "json" in cfg.formats:
        stride = max(1, (grid.size - 1) // 100)
        samples = []
        for k in range(0, grid.size, stride):
            samples.append({"t": _fmt(grid[k]),
                            "U": _complex_payload(out.u_minus(grid[k]).entries)})
        _write_json(out_dir / "U_minus.json",
                    {"family": cfg.family, "samples": samples})
    print(f"wrote build outputs to {out_dir}")
    return 0


def cmd_verify(cfg: RunConfig, out_override: str | None,
               tolerance_scale: float, wrong_h_flag: bool) -> int:
    """Run the configured residual suites; exit 0 iff all pass."""
    if wrong_h_flag:
        cfg = replace(cfg, cross_check_wrong_h=True)
    out_dir = Path(out_override or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_suites(cfg, tolerance_scale)
    width = max(len(r.name) for r in results)
    print(f"{'check'.ljust(width)}  {'max residual':>14}  {'tolerance':>12}  status")
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name.ljust(width)}  {r.max_residual:14.6e}  {r.tolerance:12.3e}  {status}")
        if r.note:
            print(f"  warning: {r.note}")
    payload = {"checks": [{"name": r.name, "max_residual": _fmt(r.max_residual),
                           "note": r.note, "tolerance": _fmt(r.tolerance),
                           "pass": r.passed}
                          for r in results],
               "all_pass": all(r.passed for r in results)}
    _write_json(out_dir / "verify.json", payload)
    return 0 if payload["all_pass"] else 1


def _resolve_level(cfg: RunConfig, out) -> tuple[int | None, str]:
    """Translate the configured level label into a prescription level index."""
    text = (cfg.propagate_level or "auto").strip().lower()
    if text == "kernel":
        return None, "kernel"
    if text == "auto":
        return 0, "auto"
    if "/" in text:
        num, den = text.split("/")
        value = float(num) / float(den)
    else:
        value = float(text)
    if cfg.family == "spin":
        if abs(value - cfg.j) < 1e-9:
            return None, f"m={value} (zero mode)"
        mu = value + 1.0
    else:
        mu = (2 * value + 3) / 4
    return out.level_for_label(mu), f"level {text}"


def cmd_propagate(cfg: RunConfig, out_override: str | None) -> int:
    """Compare numerical propagation with the closed-form solution."""
    out_dir, rep, out = _setup(cfg, out_override)
    grid = cfg.grid()
    try:
        level, label = _resolve_level(cfg, out)
    except (ValueError, KeyError) as exc:
        print(f"config error: [propagate] level = {cfg.propagate_level!r}: {exc}",
              file=sys.stderr)
        return 2

    if level is None:
        print(f"warning: {label} has no superpartner; writing numeric-only columns")
        i0 = eigh(out.i_minus(0.0))
        psi0 = i0.vectors[:, 0]
        traj = propagate(out.h_minus, psi0, grid)
        rows = []
        for k, t in enumerate(grid):
            rows.append((t, *traj.states[k].real, *traj.states[k].imag))
        dim = psi0.size
        header = ["t"] + [f"re_num_{i}" for i in range(dim)] + \
            [f"im_num_{i}" for i in range(dim)]
        _write_csv(out_dir / "solution.csv", header, rows)
        return 0

    psi0 = out.mapped_solution(level, 0.0)
    traj = propagate(out.h_minus, psi0, grid)
    rows = []
    worst = 0.0
    for k, t in enumerate(grid):
        closed = out.mapped_solution(level, t)
        numeric = traj.states[k]
        infid = 1.0 - abs(np.vdot(closed, numeric))
        worst = max(worst, infid)
        rows.append((t, *numeric.real, *numeric.imag, *closed.real, *closed.imag, infid))
    dim = psi0.size
    header = (["t"] + [f"re_num_{i}" for i in range(dim)]
              + [f"im_num_{i}" for i in range(dim)]
              + [f"re_closed_{i}" for i in range(dim)]
              + [f"im_closed_{i}" for i in range(dim)] + ["infidelity"])
    _write_csv(out_dir / "solution.csv", header, rows)
    print(f"propagated {label}: max infidelity {worst:.3e}")
    return 0


def cmd_phase(cfg: RunConfig, out_override: str | None, reverse_flag: bool) -> int:
    """Holonomies of the transported invariant eigenframes over the closed loop."""
    out_dir, rep, out = _setup(cfg, out_override)
    T = cfg.t_final
    d_theta = abs(cfg.theta(T) - cfg.theta(0.0))
    d_phi = cfg.phi(T) - cfg.phi(0.0)
    winding = d_phi / (2 * np.pi)
    if d_theta > 1e-9 or abs(winding - round(winding)) > 1e-9:
        print(f"error: loop is not closed: theta(T)-theta(0) = {d_theta:.3e}, "
              f"phi(T)-phi(0) = {d_phi:.6g} (needs multiples of 2*pi)", file=sys.stderr)
        return 2
    reverse = reverse_flag or cfg.phase_reverse
    steps = cfg.phase_steps

    es0 = eigh(out.iminus_ref)
    levels_payload = []
    for gi, group in enumerate(es0.degeneracy_groups):
        v0 = es0.vectors[:, list(group)]

        def frame(s, v0=v0):
            time = T - s if reverse else s
            return out.system.w_minus.value(time).entries @ v0

        res = berry_holonomy(frame, steps, period=T, label=f"level_{gi}")
        res2 = berry_holonomy(frame, 2 * steps, period=T, label=f"level_{gi}")
        delta = float(np.linalg.norm(res.gamma - res2.gamma))
        levels_payload.append({
            "level": gi,
            "invariant_eigenvalue": _fmt(float(es0.values[list(group)].mean())),
            "degeneracy": len(group),
            "gamma": _complex_payload(res.gamma),
            "unitarity_defect": _fmt(res.unitarity()),
            "resolution_doubling_delta": _fmt(delta),
            "steps": steps,
        })
    _write_json(out_dir / "holonomy.json",
                {"reverse": reverse, "levels": levels_payload})
    print(f"wrote holonomy.json with {len(levels_payload)} levels")
    return 0


def _sweep_cell(args):
    index, cfg_text, key, value, out_dir, tolerance_scale = args
    section, option = key.split(".", 1)
    import configparser
    import io
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(cfg_text)
    if not cp.has_section(section):
        cp.add_section(section)
    cp.set(section, option, value)
    buf = io.StringIO()
    cp.write(buf)
    cell_path = out_dir / f"sweep_cell_{index:03d}.ini"
    cell_path.write_text(buf.getvalue())
    cell_cfg = load_config(cell_path)
    results = run_suites(cell_cfg, tolerance_scale)
    payload = {"cell": index, "value": value,
               "checks": [{"name": r.name, "max_residual": _fmt(r.max_residual),
                           "tolerance": _fmt(r.tolerance), "pass": r.passed}
                          for r in results],
               "all_pass": all(r.passed for r in results)}
    _write_json(out_dir / f"sweep_cell_{index:03d}.json", payload)
    return index, value, results


def cmd_sweep(cfg: RunConfig, config_path: str, out_override: str | None,
              tolerance_scale: float) -> int:
    """Re-run the verify suites over a one-parameter family of configs."""
    if cfg.sweep_key is None or not cfg.sweep_values:
        print("error: sweep requires [sweep] key and values", file=sys.stderr)
        return 2
    out_dir = Path(out_override or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_text = Path(config_path).read_text()
    jobs = [(i, cfg_text, cfg.sweep_key, value, out_dir, tolerance_scale)
            for i, value in enumerate(cfg.sweep_values)]
    env_cap = os.environ.get("SUSYINV_THREADS")
    workers = min(len(jobs), int(env_cap) if env_cap else 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, jobs))
    else:
        outcomes = [_sweep_cell(j) for j in jobs]
    outcomes.sort(key=lambda x: x[0])

    rows = []
    all_pass = True
    for index, value, results in outcomes:
        cell_pass = all(r.passed for r in results)
        all_pass &= cell_pass
        worst = max(r.max_residual for r in results)
        rows.append((index, worst, 1.0 if cell_pass else 0.0))
        print(f"cell {index:3d}  {cfg.sweep_key} = {value:20s}  "
              f"worst residual {worst:.6e}  {'pass' if cell_pass else 'FAIL'}")
    _write_csv(out_dir / "sweep.csv", ["cell", "worst_residual", "pass"], rows)
    return 0 if all_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="susyinv",
        description="Supersymmetric dynamical invariants: build, verify, propagate, "
                    "phase, sweep.")
    parser.add_argument("command",
                        choices=["build", "verify", "propagate", "phase", "sweep"])
    parser.add_argument("--config", required=True, help="path to an INI run config")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=20240901,
                        help="seed for randomized property suites")
    parser.add_argument("--tolerance-scale", type=float, default=1.0,
                        help="multiply all suite tolerances")
    parser.add_argument("--cross-check-wrong-H", action="store_true",
                        dest="wrong_h",
                        help="verify against the mismatched plus-sector Hamiltonian")
    parser.add_argument("--reverse", action="store_true",
                        help="traverse the phase loop backwards")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    np.random.seed(args.seed % (2 ** 32))
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "build":
            return cmd_build(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.tolerance_scale, args.wrong_h)
        if args.command == "propagate":
            return cmd_propagate(cfg, args.out)
        if args.command == "phase":
            return cmd_phase(cfg, args.out, args.reverse)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.config, args.out, args.tolerance_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
