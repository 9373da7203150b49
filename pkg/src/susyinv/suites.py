"""Named verification suites driven by the CLI `verify` and `sweep` commands.

Each suite returns CheckResult(name, max_residual, tolerance, passed); a suite
passes when its worst residual stays below tolerance. The intertwining suite is
inverted by nature: it passes when the residual is large while the invariance
residual is small, which is the whole point of the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .construction import (closed_form_osc_R, closed_form_spin_R,
                           hamiltonian_from_gauge, oscillator_supersystem,
                           quadrupole_partner, run_prescription,
                           spin_supersystem)
from .dynamics import intertwining_residual, lvn_residual, propagate_unitary
from .operators import unitarity_defect
from .representations import OscillatorRep, SpinRep
from .susy import build_invariant, build_supercharge, check_superalgebra, pair_spectra

SPIN_TOLS = {"superalgebra": 1e-12, "pairing": 1e-10, "gauge": 1e-9,
             "lvn": 1e-6, "unitarity": 1e-9, "solutions": 1e-5}
OSC_TOLS = {"superalgebra": 1e-12, "pairing": 1e-10, "gauge": 1e-6,
            "lvn": 1e-4, "unitarity": 1e-6, "solutions": 1e-5}
INTERTWINING_FLOOR = 0.1
NEGATIVE_CONTROL_FLOOR = 0.05


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    note: str = ""


def _sample_times(cfg: RunConfig, count: int = 9) -> np.ndarray:
    return np.linspace(0.0, cfg.t_final, count + 1)[1:]


def _build_system(cfg: RunConfig):
    rep = cfg.make_rep()
    d0 = cfg.d0_for(rep)
    if cfg.family == "spin":
        system = spin_supersystem(rep, cfg.theta, cfg.phi, cfg.f, cfg.g, b=cfg.b, d0=d0)
    else:
        system = oscillator_supersystem(rep, cfg.theta, cfg.phi, cfg.f, d0=d0)
    return rep, run_prescription(system)


def _tols(cfg: RunConfig, scale: float) -> dict[str, float]:
    base = SPIN_TOLS if cfg.family == "spin" else OSC_TOLS
    return {k: v * scale for k, v in base.items()}


def _projector(rep) -> np.ndarray | None:
    if isinstance(rep, OscillatorRep):
        return rep.projector_interior.entries
    return None


def _suite_superalgebra(cfg, rep, out, tol) -> CheckResult:
    q = build_supercharge(out.system.d0)
    inv = build_invariant(q)
    report = check_superalgebra(q, inv)
    worst = report.max_residual()
    return CheckResult("superalgebra", worst, tol, worst < tol)


def _suite_pairing(cfg, rep, out, tol) -> CheckResult:
    inv = build_invariant(build_supercharge(out.system.d0))
    pairing = pair_spectra(inv)
    worst = 0.0
    d = inv.d.entries
    for lam, vp, vm, v in zip(pairing.shared_positive_values, pairing.plus_vectors,
                              pairing.minus_vectors, pairing.v):
        worst = max(worst, float(np.linalg.norm(
            d @ vp - np.sqrt(2 * lam) * vm @ v)))
        worst = max(worst, float(np.linalg.norm(
            v.conj().T @ v - np.eye(v.shape[0]))))
    if isinstance(rep, SpinRep) and cfg.d0_named in (None, "Jplus") \
            and cfg.d0_file is None:
        # Spectrum of 2 I+ = J- J+ is j(j+1) - m(m+1).
        expected = np.sort([rep.j * (rep.j + 1) - m * (m + 1)
                            for m in rep.m_values() if m < rep.j]) / 2
        got = np.sort(np.repeat(pairing.shared_positive_values, pairing.degeneracies))
        worst = max(worst, float(np.max(np.abs(got - expected), initial=0.0)))
    note = "" if pairing.shared_positive_values else \
        "no positive levels: every mode is a zero mode"
    return CheckResult("pairing", worst, tol, worst < tol, note)


def _suite_gauge(cfg, rep, out, tol) -> CheckResult:
    """Closed-form coefficients against the independent matrix gauge route."""
    proj = _projector(rep)
    worst = 0.0
    for t in _sample_times(cfg):
        h_gauge = hamiltonian_from_gauge(out.system.w_minus, out.system.y_minus, t)
        if isinstance(rep, SpinRep):
            if cfg.g is not None:
                h_closed = quadrupole_partner(rep, cfg.f, cfg.g, cfg.theta, cfg.phi, t)
            else:
                r = closed_form_spin_R(cfg.f, cfg.theta, cfg.phi, t)
                h_closed = r[0] * rep.J1 + r[1] * rep.J2 + r[2] * rep.J3
        else:
            r = closed_form_osc_R(cfg.f, cfg.theta, cfg.phi, t)
            h_closed = r[0] * rep.K1 + r[1] * rep.K2 + r[2] * rep.K3
        diff = h_gauge.entries - h_closed.entries
        if proj is not None:
            diff = proj @ diff @ proj
        worst = max(worst, float(np.linalg.norm(diff)))
    return CheckResult("gauge", worst, tol, worst < tol)


def _suite_lvn(cfg, rep, out, tol, wrong_h: bool = False) -> CheckResult:
    proj = _projector(rep)
    h_map = out.system.h_plus if wrong_h else out.h_minus
    worst = 0.0
    for t in _sample_times(cfg):
        worst = max(worst, lvn_residual(out.i_minus, h_map, t, projector=proj))
    name = "lvn_wrong_h" if wrong_h else "lvn"
    return CheckResult(name, worst, tol, worst < tol)


def _suite_unitarity(cfg, rep, out, tol) -> CheckResult:
    """U_-(t) unitarity and the invariant transport U I(0) U^dag = I(t)."""
    proj = _projector(rep)
    i0 = out.i_minus(0.0).entries
    worst = 0.0
    for t in _sample_times(cfg):
        worst = max(worst, unitarity_defect(out.u_minus(t).entries))
        u = out.propagator_minus(t).entries
        diff = u @ i0 @ u.conj().T - out.i_minus(t).entries
        if proj is not None:
            diff = proj @ diff @ proj
        worst = max(worst, float(np.linalg.norm(diff)))
    return CheckResult("unitarity", worst, tol, worst < tol)


def _suite_intertwining(cfg, rep, out, lvn_tol) -> CheckResult:
    """Invariance holds while the intertwining relation fails: the generality gap.

    Passes when lvn < tol and the intertwining residual at t = 1 exceeds 0.1
    (the prescription uses Y+ = 0, so d0 Y+ = Y- d0 forces Y- d0 = 0; any
    nonzero f J3 d0 breaks it). For identically zero Y- the suite instead
    requires the intertwining residual to vanish.
    """
    res_inter = intertwining_residual(out.d, out.system.h_plus, out.h_minus, 1.0,
                                      projector=_projector(rep))
    res_lvn = _suite_lvn(cfg, rep, out, lvn_tol).max_residual
    y_d0 = float(np.linalg.norm(out.system.y_minus.value(1.0).entries
                                @ out.system.d0.entries))
    if y_d0 < 1e-12:
        passed = res_inter < 1e-6 and res_lvn < lvn_tol
        return CheckResult("intertwining", res_inter, 1e-6, passed)
    passed = res_inter > INTERTWINING_FLOOR and res_lvn < lvn_tol
    return CheckResult("intertwining", res_inter, INTERTWINING_FLOOR, passed)


def _suite_solutions(cfg, rep, out, tol) -> CheckResult:
    """Mapped solutions satisfy the minus-sector Schrodinger equation and match
    numerical propagation from the same initial states."""
    proj = _projector(rep)
    grid = cfg.grid()
    traj = propagate_unitary(out.h_minus, out.system.d0.dim, grid)
    worst = 0.0
    h_fd = 1e-6
    check_times = _sample_times(cfg, count=5)
    for level in range(len(out.levels)):
        if isinstance(rep, OscillatorRep):
            n = round(2 * out.levels[level].mu - 1.5)
            if not 0 <= n <= rep.N - rep.buffer - 2:
                continue
        psi0 = out.mapped_solution(level, 0.0)
        # Finite-difference Schrodinger residual of the closed form.
        for t in check_times:
            dpsi = (out.mapped_solution(level, t + h_fd)
                    - out.mapped_solution(level, t - h_fd)) / (2 * h_fd)
            res = 1j * dpsi - out.h_minus(t).entries @ out.mapped_solution(level, t)
            if proj is not None:
                res = proj @ res
            worst = max(worst, float(np.linalg.norm(res)))
        # Infidelity against midpoint-exponential propagation.
        for k in (grid.size // 2, grid.size - 1):
            numeric = traj.operators[k] @ psi0
            infid = 1.0 - abs(np.vdot(out.mapped_solution(level, grid[k]), numeric))
            worst = max(worst, float(infid))
    return CheckResult("solutions", worst, tol, worst < tol)


def run_suites(cfg: RunConfig, tolerance_scale: float = 1.0) -> list[CheckResult]:
    rep, out = _build_system(cfg)
    tols = _tols(cfg, tolerance_scale)
    results: list[CheckResult] = []
    for name in cfg.suites:
        if name == "superalgebra":
            results.append(_suite_superalgebra(cfg, rep, out, tols["superalgebra"]))
        elif name == "pairing":
            results.append(_suite_pairing(cfg, rep, out, tols["pairing"]))
        elif name == "gauge":
            results.append(_suite_gauge(cfg, rep, out, tols["gauge"]))
        elif name == "lvn":
            results.append(_suite_lvn(cfg, rep, out, tols["lvn"]))
        elif name == "unitarity":
            results.append(_suite_unitarity(cfg, rep, out, tols["unitarity"]))
        elif name == "intertwining":
            results.append(_suite_intertwining(cfg, rep, out, tols["lvn"]))
        elif name == "solutions":
            results.append(_suite_solutions(cfg, rep, out, tols["solutions"]))
    if cfg.cross_check_wrong_h:
        results.append(_suite_lvn(cfg, rep, out, tols["lvn"], wrong_h=True))
    return results
