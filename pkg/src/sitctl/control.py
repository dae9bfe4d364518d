"""Backstepping release-rate controllers for the reduced mosquito model.

Design chain: a virtual sterile-male level ``ms_star`` makes the female
compartment contract at rate delta_F - eps; the raw backstepping law
``u_star`` drives Ms onto that level; ``u_star_plus`` strips the only
sign-indefinite term via the second-quadrant-zeroed product ``cut2``;
``u_tilde`` gates the result with a smooth cutoff so the law is defined
and nonnegative for arbitrarily large female densities.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import BioParams, ParamError, alpha, dg_dMs, g, persistence_equilibrium, validate_params

VARIANTS = ("none", "raw", "plus", "global")

# Relative width of the near-diagonal band where the divided difference in
# pi() is replaced by the exact partial derivative (cancellation guard).
PI_SWITCH_TOL = 1e-8


class ControllerError(ValueError):
    """A controller configuration violates a design constraint."""


def epsilon_for(F_hat: float, p: BioParams) -> float:
    """Contraction offset achieved by the virtual feedback with ceiling F_hat.

    Strictly decreasing in F_hat and vanishing as F_hat grows, so the
    achievable female decay rate approaches delta_F from below.
    """
    return p.nu * p.k * p.beta_E * p.nu_E / (p.nu_E * p.k + F_hat * p.beta_E + p.delta_E * p.k)


def f_hat_for(eps: float, p: BioParams) -> float:
    """Virtual-feedback ceiling whose achieved offset equals eps (inverse of epsilon_for)."""
    return p.k * (p.nu * p.beta_E * p.nu_E / eps - p.nu_E - p.delta_E) / p.beta_E


@dataclass(frozen=True)
class ControllerConfig:
    """Design constants of the backstepping family.

    ``eps`` is always the value implied by ``F_hat``; build instances via
    :meth:`design` so the coupling (and the admissibility checks against a
    parameter set) cannot be skipped.
    """

    F_hat: float  # virtual-feedback ceiling, > F_bar
    eps: float  # achieved contraction offset, < delta_F
    eta: float  # backstepping gain
    rho: float  # Lyapunov weight on F^2
    F2: float  # cutoff knee, in (F_bar, F_hat)
    cutoff_kind: str = "quintic"  # smoothstep family for chi

    @classmethod
    def design(
        cls,
        p: BioParams,
        F_hat: float | None = None,
        F_hat_ratio: float | None = None,
        eps: float | None = None,
        eta: float = 0.1,
        rho: float = 0.5,
        F2: float | None = None,
        cutoff_kind: str = "quintic",
    ) -> "ControllerConfig":
        """Build a validated configuration for parameter set ``p``.

        Exactly one of ``F_hat``, ``F_hat_ratio`` (relative to the
        persistence level F_bar) or ``eps`` (ceiling solved from the
        offset) selects the virtual feedback.  ``F2`` defaults to the
        midpoint of (F_bar, F_hat).
        """
        validate_params(p)
        F_bar = persistence_equilibrium(p).F_bar
        given = [x is not None for x in (F_hat, F_hat_ratio, eps)]
        if sum(given) != 1:
            raise ControllerError("specify exactly one of F_hat, F_hat_ratio, eps")
        if F_hat_ratio is not None:
            F_hat = F_hat_ratio * F_bar
        elif eps is not None:
            F_hat = f_hat_for(eps, p)
        assert F_hat is not None
        if not F_hat > F_bar:
            raise ControllerError(f"F_hat={F_hat} must exceed the persistence level F_bar={F_bar}")
        eps_val = epsilon_for(F_hat, p)
        if not eps_val < p.delta_F:
            raise ControllerError(
                f"achieved offset eps={eps_val} must stay below delta_F={p.delta_F}; increase F_hat"
            )
        if not eta > 0.0:
            raise ControllerError(f"gain eta must be positive, got {eta}")
        if not rho > 0.0:
            raise ControllerError(f"Lyapunov weight rho must be positive, got {rho}")
        if F2 is None:
            F2 = 0.5 * (F_bar + F_hat)
        if not F_bar < F2 < F_hat:
            raise ControllerError(f"cutoff knee F2={F2} must lie in (F_bar={F_bar}, F_hat={F_hat})")
        if cutoff_kind not in ("quintic", "cubic"):
            raise ControllerError(f"unknown cutoff_kind {cutoff_kind!r}")
        return cls(F_hat=F_hat, eps=eps_val, eta=eta, rho=rho, F2=F2, cutoff_kind=cutoff_kind)

    def guarantees_nonnegativity(self, p: BioParams) -> bool:
        """Whether eta lies in the interval (delta_F, delta_s) that certifies u >= 0."""
        return p.delta_F < self.eta < p.delta_s


def ms_star(F: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Virtual sterile-male level; holding it makes F contract at delta_F - eps.

    Vanishes at F = 0 and F = F_hat, positive in between.  The closed form
    is evaluated for all F >= 0 (negative beyond F_hat); the global
    controller's cutoff owns the domain restriction.
    """
    denom = p.beta_E * F + p.k * (p.nu_E + p.delta_E)
    return (
        (1.0 - p.nu) * p.nu_E * p.beta_E**2 * p.k * F * (cfg.F_hat - F)
        / (p.gamma_s * p.delta_M * denom**2)
    )


def dms_star_dF(F: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Closed-form slope of the virtual feedback (quotient rule)."""
    B = p.k * (p.nu_E + p.delta_E)
    C = (1.0 - p.nu) * p.nu_E * p.beta_E**2 * p.k / (p.gamma_s * p.delta_M)
    lin = p.beta_E * F + B
    return C * ((cfg.F_hat - 2.0 * F) * lin - 2.0 * p.beta_E * F * (cfg.F_hat - F)) / lin**3


def pi(F: float, Ms: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Mismatch rate between actual and virtual recruitment, times F.

    Divided difference of g between Ms and ms_star(F) away from the
    diagonal; the exact partial derivative on it.  Nonpositive on the
    whole nonnegative quadrant; 0 at the origin, where the derivative
    branch is undefined.
    """
    if F == 0.0 and Ms == 0.0:
        return 0.0
    target = ms_star(F, cfg, p)
    gap = Ms - target
    if abs(gap) > PI_SWITCH_TOL * max(1.0, abs(target)):
        return (g(F, Ms, p) - cfg.eps * F) / gap * F
    return dg_dMs(F, Ms, p) * F


def cut2(x: float, y: float) -> float:
    """Product x*y zeroed on the open second quadrant (x < 0, y > 0)."""
    if x < 0.0 and y > 0.0:
        return 0.0
    return x * y


def u_star(F: float, Ms: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Raw backstepping release rate; may be negative in places."""
    gv = g(F, Ms, p)
    return (
        (p.delta_s - cfg.eta) * Ms
        + cfg.eta * ms_star(F, cfg, p)
        - cfg.rho * pi(F, Ms, cfg, p)
        + dms_star_dF(F, cfg, p) * (gv - p.delta_F * F)
    )


def u_star_plus(F: float, Ms: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Backstepping law with the sign-indefinite term clipped by cut2.

    Nonnegative on [0, F_hat] x R+ whenever eta lies in (delta_F, delta_s).
    """
    gv = g(F, Ms, p)
    return (
        (p.delta_s - cfg.eta) * Ms
        + cfg.eta * ms_star(F, cfg, p)
        - cfg.rho * pi(F, Ms, cfg, p)
        + cut2(dms_star_dF(F, cfg, p), gv - p.delta_F * F)
    )


def chi(F: float, cfg: ControllerConfig) -> float:
    """Smooth nonincreasing gate: 1 below the knee F2, 0 above F_hat."""
    if F <= cfg.F2:
        return 1.0
    if F >= cfg.F_hat:
        return 0.0
    s = (F - cfg.F2) / (cfg.F_hat - cfg.F2)
    if cfg.cutoff_kind == "cubic":
        return 1.0 - s * s * (3.0 - 2.0 * s)
    return 1.0 - s**3 * (6.0 * s * s - 15.0 * s + 10.0)


def u_tilde(F: float, Ms: float, cfg: ControllerConfig, p: BioParams) -> float:
    """Globally defined nonnegative law: the clipped controller gated by chi."""
    c = chi(F, cfg)
    if c == 0.0:
        return 0.0
    return u_star_plus(F, Ms, cfg, p) * c


def sigma(F2: float, p: BioParams) -> float:
    """Self-decay rate of F in the uncontrolled region above F2.

    Positive exactly when F2 exceeds the persistence level; raising an
    error otherwise keeps the global decay-rate bookkeeping honest.
    """
    F_bar = persistence_equilibrium(p).F_bar
    if not F2 > F_bar:
        raise ControllerError(f"sigma requires F2 > F_bar: got F2={F2}, F_bar={F_bar}")
    return p.delta_F - p.nu * p.beta_E * p.nu_E / alpha(F2, p)


@dataclass(frozen=True)
class ControlLaw:
    """A selected feedback variant bound to its design constants and plant data.

    ``variant`` is one of 'none' (u = 0), 'raw', 'plus' or 'global'.  Only
    the 'global' variant is guaranteed total and nonnegative on the whole
    quadrant; 'none' still carries a config when Lyapunov values are wanted
    along open-loop runs.
    """

    variant: str
    config: ControllerConfig | None
    params: BioParams

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ControllerError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant != "none" and self.config is None:
            raise ControllerError(f"variant {self.variant!r} requires a ControllerConfig")
        validate_params(self.params)

    def __call__(self, F: float, Ms: float) -> float:
        if self.variant == "none":
            return 0.0
        if self.variant == "raw":
            return u_star(F, Ms, self.config, self.params)
        if self.variant == "plus":
            return u_star_plus(F, Ms, self.config, self.params)
        return u_tilde(F, Ms, self.config, self.params)

    def evaluator(self):
        """Return a fused closure u(F, Ms) for tight integration loops.

        Algebraically identical to calling the law; parameters are unpacked
        into locals once so the per-step cost is plain float arithmetic
        (tests pin the closure against the composed functions on a grid).
        """
        if self.variant == "none":
            return lambda F, Ms: 0.0
        cfg, p = self.config, self.params
        variant = self.variant
        beta_E, gamma_s, nu_E, nu = p.beta_E, p.gamma_s, p.nu_E, p.nu
        delta_E, delta_M, delta_F, delta_s, k = p.delta_E, p.delta_M, p.delta_F, p.delta_s, p.k
        F_hat, eps, eta, rho, F2 = cfg.F_hat, cfg.eps, cfg.eta, cfg.rho, cfg.F2
        cubic = cfg.cutoff_kind == "cubic"
        B = k * (nu_E + delta_E)
        C = (1.0 - nu) * nu_E * beta_E**2 * k / (gamma_s * delta_M)
        A = nu * (1.0 - nu) * beta_E**2 * nu_E**2
        inv_span = 1.0 / (F_hat - F2)
        switch = PI_SWITCH_TOL

        def evaluate(F: float, Ms: float) -> float:
            if variant == "global":
                if F >= F_hat:
                    return 0.0
                if F <= F2:
                    c = 1.0
                else:
                    s = (F - F2) * inv_span
                    c = 1.0 - s * s * (3.0 - 2.0 * s) if cubic else 1.0 - s**3 * (6.0 * s * s - 15.0 * s + 10.0)
            else:
                c = 1.0
            lin = beta_E * F + B
            target = C * F * (F_hat - F) / (lin * lin)
            slope = C * ((F_hat - 2.0 * F) * lin - 2.0 * beta_E * F * (F_hat - F)) / lin**3
            if F == 0.0:
                gv = 0.0
            else:
                a = beta_E * F / k + nu_E + delta_E
                denom = (1.0 - nu) * nu_E * beta_E * F + a * delta_M * gamma_s * Ms
                gv = A * F * F / (a * denom)
            if F == 0.0 and Ms == 0.0:
                mismatch = 0.0
            else:
                gap = Ms - target
                if abs(gap) > switch * max(1.0, abs(target)):
                    mismatch = (gv - eps * F) / gap * F
                else:
                    a = beta_E * F / k + nu_E + delta_E
                    denom = (1.0 - nu) * nu_E * beta_E * F + a * delta_M * gamma_s * Ms
                    mismatch = -A * F * F * delta_M * gamma_s / (denom * denom) * F
            drift = gv - delta_F * F
            last = slope * drift
            if variant != "raw" and slope < 0.0 and drift > 0.0:
                last = 0.0
            u = (delta_s - eta) * Ms + eta * target - rho * mismatch + last
            return u * c

        return evaluate
