"""Particle loss, gain compensation and detection thresholds.

Loss on each mode is a beamsplitter of reflectivity ``r`` against a vacuum
ancilla, ``a^dag -> sqrt(1-r) a^dag - i sqrt(r) v^dag``, with the ancilla traced
out.  Two routes are kept side by side and never substituted for each other:

* closed forms in ``<n> = lam^2/(1-lam^2)`` and ``(Delta n)^2 = 2 <n>^2``;
* a numeric Kraus-channel run on the truncated four-mode state.

The closed forms are written with plain arithmetic so they also accept
:class:`fractions.Fraction` inputs and evaluate exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .fock import (
    DensityMatrix,
    FockError,
    KrausChannel,
    FockSpace,
    apply_channel,
    local_channel,
)
from .states import make_psi1
from .witness import WitnessReport, evaluate_criterion, psi1_stokes

#: default accuracy budget for the four-mode numeric run at modest cutoffs
NUMERIC_TAIL_TOL = 1e-3


@dataclass(frozen=True)
class LossScenario:
    r_a: float
    r_b: float
    lam: float
    g_a: float | None = None
    g_b: float | None = None

    def __post_init__(self):
        for name in ("r_a", "r_b"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise FockError(f"{name} must lie in [0, 1], got {v}")
        if not 0 <= self.lam < 1:
            raise FockError(f"lambda must lie in [0, 1), got {self.lam}")
        for name in ("g_a", "g_b"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise FockError(f"{name} must be positive, got {v}")

    @property
    def has_gains(self) -> bool:
        return self.g_a is not None or self.g_b is not None

    @property
    def gains(self) -> tuple:
        return (1 if self.g_a is None else self.g_a, 1 if self.g_b is None else self.g_b)

    @property
    def mean_n(self):
        """Mean occupation per mode, ``sinh(r)^2``."""
        return self.lam**2 / (1 - self.lam**2)

    @property
    def var_n_paper(self):
        """The number variance used by the closed forms, ``2 sinh(r)^4``."""
        return 2 * self.mean_n**2


def loss_kraus_matrices(cutoff: int, r: float) -> list:
    """Single-mode photon-loss Kraus matrices ``K_k``, ``k = 0..cutoff``.

    ``K_k |n> = (-i)^k sqrt(C(n,k)) (1-r)^((n-k)/2) r^(k/2) |n-k>``: ``k``
    photons reflected into the traced ancilla.
    """
    if not 0 <= r <= 1:
        raise FockError(f"reflectivity must lie in [0, 1], got {r}")
    d = cutoff + 1
    ops = []
    for k in range(d):
        K = np.zeros((d, d), dtype=complex)
        for n in range(k, d):
            K[n - k, n] = math.sqrt(math.comb(n, k)) * (1 - r) ** ((n - k) / 2) * r ** (k / 2)
        ops.append(K * (-1j) ** k)
    return ops


def loss_channel(space: FockSpace, mode: int, r: float) -> KrausChannel:
    return local_channel(space, mode, loss_kraus_matrices(space.cutoffs[space.check_mode(mode)], r))


def analytic_lossy_lhs(s: LossScenario):
    """Closed-form left side under loss, without gains."""
    if s.has_gains:
        raise FockError("analytic_lossy_lhs is the pure-loss form; use gain_adjusted_analytic")
    ra, rb = s.r_a, s.r_b
    return 3 * ((ra - rb) ** 2 * s.var_n_paper + (ra * (1 - ra) + rb * (1 - rb)) * s.mean_n) / 2


def analytic_lossy_rhs(s: LossScenario):
    return (1 - s.r_a) * s.mean_n + (1 - s.r_b) * s.mean_n


def gain_adjusted_analytic(s: LossScenario) -> tuple:
    """Closed-form ``(lhs, rhs)`` with gains; missing gains count as 1."""
    g_a, g_b = s.gains
    ta, tb = 1 - s.r_a, 1 - s.r_b
    lhs = 3 * (g_b * tb - g_a * ta) ** 2 * s.var_n_paper / 2 + 3 * (g_b * s.r_b * tb + g_a * s.r_a * ta) * s.mean_n / 2
    rhs = g_b * tb * s.mean_n + g_a * ta * s.mean_n
    return lhs, rhs


def known_loss_gains(r_a: float, r_b: float) -> tuple:
    """Gains ``(g_a, g_b)`` that null the quadratic term for known losses."""
    if r_a >= 1 or r_b >= 1:
        raise FockError("known-loss gains need r_a, r_b < 1")
    return (1 - r_b) / (1 - r_a), 1.0


@dataclass(frozen=True)
class GainResult:
    g_a: float
    g_b: float
    margin: float
    paper_ratio: float | None

    @property
    def ratio(self) -> float:
        return self.g_a / self.g_b

    @property
    def detected(self) -> bool:
        return self.margin > 0


def optimize_gains(s: LossScenario, log_bound: float = 12.0, xtol: float = 1e-6) -> GainResult:
    """Minimise closed-form ``lhs/rhs`` over ``g_a/g_b`` with ``g_b = 1``.

    Only the ratio matters up to an overall scale, so the search is a bounded
    scalar minimisation over ``log(g_a)``.  ``margin = 1 - lhs/rhs``; positive
    means the gain-adjusted inequality is violated.
    """
    if s.r_a == 1 and s.r_b == 1:
        raise FockError("both sides lose every particle; gains are undefined")
    if s.lam == 0:
        raise FockError("lambda = 0 carries no particles; gains are undefined")

    def objective(log_g):
        lhs, rhs = gain_adjusted_analytic(LossScenario(s.r_a, s.r_b, s.lam, math.exp(log_g), 1.0))
        return lhs / rhs

    res = minimize_scalar(objective, bounds=(-log_bound, log_bound), method="bounded", options={"xatol": xtol})
    g_a = math.exp(res.x)
    reference = (1 - s.r_b) / (1 - s.r_a) if s.r_a < 1 else None
    return GainResult(g_a=g_a, g_b=1.0, margin=1.0 - float(res.fun), paper_ratio=reference)


@dataclass(frozen=True)
class LossReport:
    r_a: float
    r_b: float
    lam: float
    lhs_analytic: float
    rhs_analytic: float
    detected: bool
    mean_n: float
    var_n_paper: float
    lhs_numeric: float | None = None
    rhs_numeric: float | None = None
    detected_numeric: bool | None = None
    lhs_gap: float | None = None
    tail_budget: float | None = None
    tail_mass: float | None = None
    cutoff: int | None = None
    g_a: float | None = None
    g_b: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LossReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    CSV_FIELDS = (
        "lam", "r_a", "r_b", "g_a", "g_b", "lhs_analytic", "rhs_analytic", "detected",
        "lhs_numeric", "rhs_numeric", "detected_numeric", "lhs_gap", "tail_budget",
        "tail_mass", "cutoff", "mean_n", "var_n_paper",
    )


def analytic_report(s: LossScenario) -> LossReport:
    if s.has_gains:
        lhs, rhs = gain_adjusted_analytic(s)
    else:
        lhs, rhs = analytic_lossy_lhs(s), analytic_lossy_rhs(s)
    return LossReport(
        r_a=float(s.r_a),
        r_b=float(s.r_b),
        lam=float(s.lam),
        lhs_analytic=float(lhs),
        rhs_analytic=float(rhs),
        detected=bool(lhs < rhs),
        mean_n=float(s.mean_n),
        var_n_paper=float(s.var_n_paper),
        g_a=None if s.g_a is None else float(s.g_a),
        g_b=None if s.g_b is None else float(s.g_b),
    )


def truncated_mean_n(lam: float, cutoff: int) -> float:
    """Per-mode mean of the TMSS truncated at ``cutoff`` and renormalised."""
    w = lam ** (2 * np.arange(cutoff + 1))
    return float(np.arange(cutoff + 1) @ w / w.sum())


def lossy_state(s: LossScenario, cutoff: int) -> DensityMatrix:
    """Lossy four-mode density matrix on ``(b+, a+, b-, a-)``."""
    psi = make_psi1(s.lam, cutoff, tail_tol=None)
    rho = DensityMatrix.from_state(psi)
    psi = None
    for mode, r in ((0, s.r_b), (1, s.r_a), (2, s.r_b), (3, s.r_a)):
        if r == 0:
            continue
        rho = apply_channel(rho, loss_channel(rho.space, mode, r))
    return rho


def numeric_witness(s: LossScenario, cutoff: int, tail_tol: float = NUMERIC_TAIL_TOL) -> WitnessReport:
    rho = lossy_state(s, cutoff)
    alice, bob = psi1_stokes(rho.space)
    gains = s.gains if s.has_gains else None
    return evaluate_criterion(rho, alice, bob, gains=gains, tail_tol=tail_tol)


def numeric_lossy_report(s: LossScenario, cutoff: int, tail_tol: float = NUMERIC_TAIL_TOL) -> LossReport:
    """Closed forms plus the Kraus-channel oracle at the given cutoff.

    ``tail_budget`` bounds how far the truncated right side may sit from the
    closed form purely through truncation; ``lhs_gap`` is ``numeric -
    analytic`` and is reported, not corrected.
    """
    base = analytic_report(s)
    w = numeric_witness(s, cutoff, tail_tol)
    g_a, g_b = s.gains
    budget = (g_a + g_b) * (float(s.mean_n) - truncated_mean_n(float(s.lam), cutoff))
    return LossReport(
        **{
            **base.to_dict(),
            "lhs_numeric": w.lhs,
            "rhs_numeric": w.rhs,
            "detected_numeric": bool(w.lhs < w.rhs),
            "lhs_gap": w.lhs - base.lhs_analytic,
            "tail_budget": abs(budget),
            "tail_mass": w.tail_mass,
            "cutoff": int(cutoff),
        }
    )


def symmetric_threshold(lam) -> float:
    """Reflectivity where the symmetric-loss closed forms cross (``2/3`` for any ``lam``)."""

    def gap(r):
        sc = LossScenario(r, r, lam)
        return float(analytic_lossy_lhs(sc) - analytic_lossy_rhs(sc))

    return brentq(gap, 1e-9, 1 - 1e-9, xtol=1e-15)
