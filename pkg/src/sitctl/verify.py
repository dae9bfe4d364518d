"""Numerical verification of the stability certificates.

Everything here checks inequalities the theory asserts: Lyapunov decay
envelopes along integrated trajectories, the squared-norm convergence
estimate, and static grid audits of the controller identities
(virtual-feedback identity, mismatch-rate sign, the ms_star slope
inequality, clipped-law nonnegativity, the linear growth bound).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import (
    ControllerConfig,
    chi,
    dms_star_dF,
    ms_star,
    pi,
    u_star_plus,
    u_tilde,
)
from .model import BioParams, g
from .simulate import Trajectory

AUDIT_CHECKS = ("nonneg_plus", "lemma4", "pi_sign", "mstar_identity", "utilde_bound")


@dataclass
class DecayReport:
    """Outcome of checking V(t) against its guaranteed exponential envelope."""

    lambda_theory: float
    lambda_fit: float
    c0_fit: float
    max_violation: float  # worst V(t) / (V(0) e^{-lambda t})
    window: tuple  # (t_start, t_end) of the log-linear fit
    passed: bool


@dataclass
class AuditReport:
    """Worst case of one inequality over a documented grid."""

    check: str
    grid: str
    passed: bool
    worst_value: float
    witness: tuple  # (F,) or (F, Ms) where the worst case occurred
    tolerance: float

    def csv_row(self) -> str:
        wF = self.witness[0]
        wMs = self.witness[1] if len(self.witness) > 1 else ""
        return f"{self.check},{self.grid},{self.passed},{self.worst_value!r},{wF!r},{wMs!r}"


def lyapunov_V(F: float, Ms: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Backstepping Lyapunov value: weighted F^2 plus squared virtual mismatch."""
    gap = Ms - ms_star(F, cfg, p)
    return 0.5 * cfg.rho * F * F + 0.5 * gap * gap


def fit_decay_rate(times, values):
    """Least-squares exponential fit; returns (rate, prefactor).

    Ordinary least squares on (t, ln value); the rate is the negated slope.
    Needs at least 10 strictly positive samples.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 10:
        raise ValueError(f"need at least 10 samples for a decay fit, got {len(t)}")
    if np.any(v <= 0.0):
        raise ValueError("decay fit requires strictly positive values")
    slope, intercept = np.polyfit(t, np.log(v), 1)
    return -slope, float(np.exp(intercept))


def _fit_window(traj: Trajectory, values: np.ndarray, floor: float):
    """Sample mask excluding the initial transient and the float floor."""
    t = traj.times
    mask = (t >= 0.05 * t[-1]) & (values > floor)
    return mask


def verify_decay(traj: Trajectory, lambda_theory: float, tol: float = 1e-3) -> DecayReport:
    """Check V(t) <= V(0) e^{-lambda t} (1 + tol) at every sample.

    Also fits the empirical rate on log V over the window that skips the
    first 5% of the horizon and values below 1e-12 V(0), and records the
    fitted squared-norm prefactor for the convergence estimate.
    """
    if traj.lyapunov is None:
        raise ValueError("trajectory has no Lyapunov samples (reduced-model runs only)")
    V = traj.lyapunov
    t = traj.times
    V0 = V[0]
    if V0 == 0.0:
        return DecayReport(lambda_theory, float("nan"), 1.0, 0.0, (0.0, 0.0), True)
    envelope = V0 * np.exp(-lambda_theory * t)
    ratios = V / envelope
    max_violation = float(np.max(ratios))
    passed = max_violation <= 1.0 + tol

    mask = _fit_window(traj, V, 1e-12 * V0)
    if np.count_nonzero(mask) >= 10:
        lambda_fit, _ = fit_decay_rate(t[mask], V[mask])
        window = (float(t[mask][0]), float(t[mask][-1]))
    else:
        lambda_fit, window = float("nan"), (0.0, 0.0)

    # Squared-norm convergence estimate: smallest c0 making it hold everywhere.
    norm2 = traj.F**2 + traj.Ms**2
    c0_fit = float(np.max(norm2 / (norm2[0] * np.exp(-lambda_theory * t)))) if norm2[0] > 0 else 1.0

    return DecayReport(
        lambda_theory=lambda_theory,
        lambda_fit=lambda_fit,
        c0_fit=c0_fit,
        max_violation=max_violation,
        window=window,
        passed=passed,
    )


def vdot_check(traj: Trajectory, lambda_theory: float, tol: float = 1e-3) -> AuditReport:
    """Check the differential inequality dV/dt <= -lambda V + tol (1 + V).

    dV/dt is estimated by central differences on the recorded samples, so
    the tolerance absorbs an O(dt^2) discretization term; the check runs
    against the trajectory actually integrated, not a symbolic closed loop.
    """
    if traj.lyapunov is None:
        raise ValueError("trajectory has no Lyapunov samples")
    V = traj.lyapunov
    t = traj.times
    vdot = (V[2:] - V[:-2]) / (t[2:] - t[:-2])
    slack = vdot + lambda_theory * V[1:-1] - tol * (1.0 + V[1:-1])
    worst = int(np.argmax(slack))
    return AuditReport(
        check="vdot",
        grid=f"{len(vdot)} interior samples",
        passed=bool(np.all(slack <= 0.0)),
        worst_value=float(slack[worst]),
        witness=(float(t[worst + 1]),),
        tolerance=tol,
    )


@dataclass
class ControlBudget:
    """Trapezoidal release total over the horizon plus an exponential tail estimate."""

    total: float
    tail: float


def control_budget(traj: Trajectory) -> ControlBudget:
    """Integrate the release rate; estimate the post-horizon tail from the last decade."""
    total = float(np.trapezoid(traj.controls, traj.times))
    tail = 0.0
    n = len(traj.times)
    last = slice(max(0, n - max(10, n // 10)), n)
    u_last = traj.controls[last]
    if np.all(u_last > 0.0) and len(u_last) >= 10:
        rate, _ = fit_decay_rate(traj.times[last], u_last)
        if rate > 0.0:
            tail = float(traj.controls[-1] / rate)
    return ControlBudget(total=total, tail=tail)


def _grid_extent_ms(cfg: ControllerConfig, p: BioParams, factor: float) -> float:
    Fs = np.linspace(0.0, cfg.F_hat, 2001)
    return factor * max(ms_star(float(F), cfg, p) for F in Fs)


def audit_grid(cfg: ControllerConfig, p: BioParams, which: str, n_1d: int = 4000, n_2d: int = 400) -> AuditReport:
    """Evaluate one named controller inequality on its documented grid.

    Checks: 'nonneg_plus' (clipped law >= 0 on [0,F_hat] x [0,10 max ms*]),
    'lemma4' (ms* - F dms*/dF >= 0 plus its closed-form identity),
    'pi_sign' (mismatch rate nonpositive), 'mstar_identity'
    (g(F, ms*(F)) = eps F on a log grid), 'utilde_bound' (global law under
    a linear bound (delta_s - eta) Ms + K F, K estimated on the grid).
    """
    if which == "mstar_identity":
        Fs = np.logspace(-6, np.log10(cfg.F_hat), 1000)
        worst, witness = 0.0, (0.0,)
        for F in Fs:
            F = float(F)
            rel = abs(g(F, ms_star(F, cfg, p), p) - cfg.eps * F) / (cfg.eps * F)
            if rel > worst:
                worst, witness = rel, (F,)
        return AuditReport("mstar_identity", "1000 log-spaced F in (0..F_hat]", worst <= 1e-9, worst, witness, 1e-9)

    if which == "lemma4":
        Fs = np.linspace(0.0, cfg.F_hat, n_1d)
        B = p.k * (p.nu_E + p.delta_E)
        C = (1.0 - p.nu) * p.nu_E * p.beta_E**2 * p.k / (p.gamma_s * p.delta_M)
        scale = max(ms_star(float(F), cfg, p) for F in Fs)
        worst_gap, worst_id, witness = np.inf, 0.0, (0.0,)
        for F in Fs:
            F = float(F)
            lhs = ms_star(F, cfg, p) - F * dms_star_dF(F, cfg, p)
            closed = C * F * F * (p.beta_E * (2.0 * cfg.F_hat - F) + B) / (p.beta_E * F + B) ** 3
            rel = abs(lhs - closed) / max(1.0, abs(closed))
            if lhs < worst_gap:
                worst_gap, witness = lhs, (F,)
            worst_id = max(worst_id, rel)
        passed = worst_gap >= -1e-12 * scale and worst_id <= 1e-9
        return AuditReport("lemma4", f"{n_1d} points on [0..F_hat]", passed, float(worst_gap), witness, 1e-12 * scale)

    if which == "pi_sign":
        Fs = np.linspace(0.0, cfg.F_hat, n_2d)
        Mss = np.linspace(0.0, _grid_extent_ms(cfg, p, 10.0), n_2d)
        worst, witness = -np.inf, (0.0, 0.0)
        for F in Fs:
            F = float(F)
            for Ms in Mss:
                v = pi(F, float(Ms), cfg, p)
                if v > worst:
                    worst, witness = v, (F, float(Ms))
        return AuditReport("pi_sign", f"{n_2d}x{n_2d} on [0..F_hat]x[0..10 max ms*]", worst <= 1e-12, float(worst), witness, 1e-12)

    if which == "nonneg_plus":
        Fs = np.linspace(0.0, cfg.F_hat, n_2d)
        Mss = np.linspace(0.0, _grid_extent_ms(cfg, p, 10.0), n_2d)
        worst, witness, scale = np.inf, (0.0, 0.0), 0.0
        for F in Fs:
            F = float(F)
            for Ms in Mss:
                v = u_star_plus(F, float(Ms), cfg, p)
                scale = max(scale, abs(v))
                if v < worst:
                    worst, witness = v, (F, float(Ms))
        return AuditReport(
            "nonneg_plus", f"{n_2d}x{n_2d} on [0..F_hat]x[0..10 max ms*]",
            worst >= -1e-9 * scale, float(worst), witness, 1e-9 * scale,
        )

    if which == "utilde_bound":
        Fs = np.linspace(0.0, 3.0 * cfg.F_hat, n_2d)
        Mss = np.linspace(0.0, 1e5, n_2d)
        worst, witness, K = np.inf, (0.0, 0.0), 0.0
        for F in Fs:
            F = float(F)
            for Ms in Mss:
                v = u_tilde(F, float(Ms), cfg, p)
                if v < worst:
                    worst, witness = v, (F, float(Ms))
                if F > 0.0:
                    K = max(K, (v - (p.delta_s - cfg.eta) * Ms) / F)
        passed = worst >= 0.0 and np.isfinite(K)
        report = AuditReport("utilde_bound", f"{n_2d}x{n_2d} on [0..3 F_hat]x[0..1e5]", passed, float(worst), witness, 0.0)
        report.grid += f"; K={K:.6g}"
        return report

    raise ValueError(f"unknown audit check {which!r}; expected one of {AUDIT_CHECKS}")


def chi_sandwich(cfg: ControllerConfig, n: int = 1000) -> bool:
    """0 <= chi <= 1 and nonincreasing on a dense grid."""
    Fs = np.linspace(0.0, 2.0 * cfg.F_hat, n)
    vals = [chi(float(F), cfg) for F in Fs]
    return all(0.0 <= v <= 1.0 for v in vals) and all(a >= b for a, b in zip(vals, vals[1:]))
