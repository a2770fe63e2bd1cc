"""Two-mode squeezed states, in closed form and by Hamiltonian evolution.

Mode ordering for the four-mode state is fixed as ``(b+, a+, b-, a-)``: Bob's
mode precedes Alice's in each polarisation pair.  Squeezing is real
(``lam = tanh r`` with ``r >= 0``); complex squeezing phases are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    NORM_TOL,
    FockError,
    FockSpace,
    NumericalFailure,
    StateVector,
    auto_cutoff,
    evolve,
    mode_operator,
    tensor,
)

# mode indices of the four-mode state
B_PLUS, A_PLUS, B_MINUS, A_MINUS = 0, 1, 2, 3
PSI1_MODES = ("b+", "a+", "b-", "a-")
SECTOR_LABELS = ("+I", "-I", "+II", "-II")


@dataclass(frozen=True)
class SqueezingParams:
    lam: float
    r: float

    def __post_init__(self):
        if not (0 <= self.lam < 1):
            raise FockError(f"lambda must lie in [0, 1), got {self.lam}")
        if self.r < 0:
            raise FockError(f"squeezing parameter must be >= 0, got {self.r}")
        if abs(math.tanh(self.r) - self.lam) > 1e-12:
            raise FockError("lam and r are inconsistent: lam must equal tanh(r)")

    @classmethod
    def from_lambda(cls, lam: float) -> "SqueezingParams":
        if not (0 <= lam < 1):
            raise FockError(f"lambda must lie in [0, 1), got {lam}")
        return cls(lam=float(lam), r=float(math.atanh(lam)))

    @classmethod
    def from_r(cls, r: float) -> "SqueezingParams":
        return cls(lam=math.tanh(r), r=float(r))

    @property
    def mean_n(self) -> float:
        """Mean occupation of any single mode, ``sinh(r)**2``."""
        return self.lam**2 / (1 - self.lam**2)


def _as_params(p) -> SqueezingParams:
    return p if isinstance(p, SqueezingParams) else SqueezingParams.from_lambda(p)


def make_tmss(p, cutoff: int | str = "auto", *, tail_tol: float | None = NORM_TOL, renormalize: bool = True) -> StateVector:
    """Two-mode squeezed vacuum ``sqrt(1-lam^2) sum_n lam^n |n, n>``.

    ``tail_tol`` bounds the truncated weight ``lam**(2*(cutoff+1))``; pass
    ``None`` to accept any cutoff.  With ``renormalize=False`` the exact
    truncated amplitudes are kept and the norm falls short of one by the tail.
    """
    p = _as_params(p)
    if cutoff == "auto":
        cutoff = auto_cutoff(p.lam, NORM_TOL if tail_tol is None else tail_tol)
    cutoff = int(cutoff)
    tail = p.lam ** (2 * (cutoff + 1))
    if tail_tol is not None and tail > tail_tol:
        raise NumericalFailure(f"cutoff {cutoff} too small for lambda={p.lam}", tail)
    space = FockSpace.uniform(2, cutoff)
    n = np.arange(cutoff + 1)
    amps = np.zeros((cutoff + 1, cutoff + 1))
    amps[n, n] = math.sqrt(1 - p.lam**2) * p.lam**n
    state = StateVector(space, amps.ravel())
    return state.normalized() if renormalize else state


def make_psi1(p, cutoff: int | str = "auto", *, tail_tol: float | None = NORM_TOL, renormalize: bool = True) -> StateVector:
    """Product of two identical TMSS on modes ``(b+, a+, b-, a-)``."""
    t = make_tmss(p, cutoff, tail_tol=tail_tol, renormalize=renormalize)
    return tensor(t, t)


@dataclass(frozen=True)
class SectoredState:
    """Tensor product of labelled two-mode sectors, never materialised jointly."""

    sectors: tuple

    def __getitem__(self, label: str) -> StateVector:
        for name, state in self.sectors:
            if name == label:
                return state
        raise KeyError(label)

    @property
    def labels(self) -> tuple:
        return tuple(name for name, _ in self.sectors)

    @property
    def norm2(self) -> float:
        return math.prod(s.norm2 for _, s in self.sectors)


def make_psi2(p, cutoff: int | str = "auto", *, tail_tol: float | None = NORM_TOL) -> SectoredState:
    """Four independent atom-photon TMSS sectors with a common ``lam``.

    Each sector is normalised on its own, so the product is normalised too.
    """
    t = make_tmss(p, cutoff, tail_tol=tail_tol)
    return SectoredState(tuple((label, t) for label in SECTOR_LABELS))


def squeezing_generator(space: FockSpace, mode_a: int = 0, mode_b: int = 1):
    """``G = i (a^dag b^dag - a b)``; ``exp(-i r G)`` squeezes the vacuum to ``tanh r``."""
    a = mode_operator(space, mode_a, "annihilate")
    b = mode_operator(space, mode_b, "annihilate")
    pair = a.dag() @ b.dag()
    G = 1j * (pair - pair.dag())
    return type(G)(space, G.entries, f"i(a{mode_a}^dag a{mode_b}^dag - h.c.)")


def make_tmss_by_evolution(r: float, cutoff: int, *, tail_tol: float = 1e-10) -> StateVector:
    """Evolve the vacuum under the pair-creation Hamiltonian for time ``r``."""
    if r < 0:
        raise FockError(f"squeezing parameter must be >= 0, got {r}")
    space = FockSpace.uniform(2, cutoff)
    vac = StateVector.vacuum(space)
    return evolve(vac, squeezing_generator(space), r, tail_tol=tail_tol)
