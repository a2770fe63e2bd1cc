"""Schwinger-boson Stokes operators and the particle-counting separability test.

For two modes ``(+, -)`` on one side::

    S_z = (n+ - n-)/2
    S_x = (a+^dag a- + a-^dag a+)/2
    S_y = sign * i (a-^dag a+ - a+^dag a-)/2

Any separable state of Alice (``S``) and Bob (``J``) satisfies::

    <(J_x - S_x)^2> + <(J_y + S_y)^2> + <(J_z - S_z)^2>  >=  (<n_A> + <n_B>)/2

and the report's ``witness`` is ``lhs - rhs``; a negative value certifies
entanglement, zero is the boundary and is never counted as detection.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from math import comb, factorial

import numpy as np

from ._io import csv_text
from .states import make_psi1
from .fock import (
    OPERATOR_TOL,
    DensityMatrix,
    FockError,
    FockSpace,
    ModeOperator,
    NumericalFailure,
    SpaceMismatch,
    StateVector,
    expectation,
    hopping,
    identity,
    mode_operator,
    second_moment,
    tensor,
)

# S_y sign used for both sides; ``calibrated_sy_signs`` re-derives it.
SY_SIGN = 1


@dataclass(frozen=True, eq=False)
class StokesSet:
    side: str
    sx: ModeOperator
    sy: ModeOperator
    sz: ModeOperator
    total_number: ModeOperator
    plus_mode: int
    minus_mode: int
    sy_sign: int = SY_SIGN

    @property
    def space(self) -> FockSpace:
        return self.sx.space

    @property
    def components(self) -> tuple:
        return (self.sx, self.sy, self.sz)

    def casimir(self) -> ModeOperator:
        return self.sx @ self.sx + self.sy @ self.sy + self.sz @ self.sz

    def exact_block_mask(self) -> np.ndarray:
        """Basis states whose side total lies below both cutoffs.

        Hard truncation breaks the su(2) algebra only on blocks where
        ``n+ + n-`` exceeds the smaller cutoff of the pair.
        """
        sp_ = self.space
        tot = sp_.mode_occupations(self.plus_mode) + sp_.mode_occupations(self.minus_mode)
        return tot <= min(sp_.cutoffs[self.plus_mode], sp_.cutoffs[self.minus_mode])

    def convention(self) -> str:
        return f"Sy = {'+' if self.sy_sign > 0 else '-'}i(a-^dag a+ - a+^dag a-)/2"


def build_stokes(space: FockSpace, plus_mode: int, minus_mode: int, side: str, sy_sign: int = SY_SIGN) -> StokesSet:
    if int(plus_mode) == int(minus_mode):
        raise FockError("Stokes operators need two distinct modes")
    if sy_sign not in (1, -1):
        raise FockError("sy_sign must be +1 or -1")
    up = hopping(space, plus_mode, minus_mode)  # a+^dag a-
    down = hopping(space, minus_mode, plus_mode)
    n_p = mode_operator(space, plus_mode, "number")
    n_m = mode_operator(space, minus_mode, "number")
    tag = side[:1].upper() if side else "?"
    sx = ModeOperator(space, (up.entries + down.entries) * 0.5, f"{tag}_x")
    sy = ModeOperator(space, (down.entries - up.entries) * (0.5j * sy_sign), f"{tag}_y")
    sz = ModeOperator(space, (n_p.entries - n_m.entries) * 0.5, f"{tag}_z")
    total = ModeOperator(space, n_p.entries + n_m.entries, f"n_{tag}")
    return StokesSet(side, sx, sy, sz, total, int(plus_mode), int(minus_mode), sy_sign)


def psi1_stokes(space: FockSpace, sy_sign=(SY_SIGN, SY_SIGN)):
    """Alice and Bob Stokes sets for the ``(b+, a+, b-, a-)`` ordering."""
    alice = build_stokes(space, 1, 3, "Alice", sy_sign[0])
    bob = build_stokes(space, 0, 2, "Bob", sy_sign[1])
    return alice, bob


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessReport:
    term_x: float
    term_y: float
    term_z: float
    lhs: float
    rhs: float
    witness: float
    n_alice: float
    n_bob: float
    tail_mass: float
    gains: tuple | None = None
    cutoffs: tuple = ()
    convention: str = ""
    note: str = ""

    @property
    def detected(self) -> bool:
        return self.witness < 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gains"] = list(self.gains) if self.gains is not None else None
        d["cutoffs"] = list(self.cutoffs)
        d["detected"] = self.detected
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "WitnessReport":
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in data.items() if k in names}
        if kw.get("gains") is not None:
            kw["gains"] = tuple(kw["gains"])
        kw["cutoffs"] = tuple(kw.get("cutoffs", ()))
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    CSV_FIELDS = (
        "term_x", "term_y", "term_z", "lhs", "rhs", "witness",
        "n_alice", "n_bob", "tail_mass", "g_a", "g_b", "detected",
    )

    def csv_row(self) -> dict:
        g_a, g_b = self.gains if self.gains is not None else (1.0, 1.0)
        row = {k: getattr(self, k) for k in self.CSV_FIELDS[:9]}
        row.update(g_a=g_a, g_b=g_b, detected=self.detected)
        return row


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > OPERATOR_TOL * max(1.0, abs(z.real)):
        raise NumericalFailure(f"{what} has an imaginary part", abs(z.imag))
    return float(z.real)


def _weights(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return np.abs(state.amplitudes) ** 2
    return np.diagonal(state.entries).real


def truncation_leak(state, alice: StokesSet, bob: StokesSet) -> float:
    """Weight on blocks where the truncated Stokes operators are not exact."""
    w = _weights(state)
    ok = alice.exact_block_mask() & bob.exact_block_mask()
    return float(w[~ok].sum())


def evaluate_criterion(state, alice: StokesSet, bob: StokesSet, gains=None, tail_tol: float = OPERATOR_TOL) -> WitnessReport:
    """Evaluate both sides of the separability inequality on ``state``.

    ``gains=(g_a, g_b)`` rescales Alice's and Bob's measured counts: every
    Stokes component and total number is multiplied by its side's gain.
    """
    space = state.space
    if alice.space != space or bob.space != space:
        raise SpaceMismatch("Stokes operators and state act on different spaces")
    leak = truncation_leak(state, alice, bob)
    if leak > tail_tol:
        raise NumericalFailure("state reaches photon-number blocks truncated by the cutoff", leak)
    g_a, g_b = (1.0, 1.0) if gains is None else (float(gains[0]), float(gains[1]))

    diffs = (
        g_b * bob.sx - g_a * alice.sx,
        g_b * bob.sy + g_a * alice.sy,
        g_b * bob.sz - g_a * alice.sz,
    )
    terms = [second_moment(state, d) for d in diffs]
    n_a = _real(expectation(state, alice.total_number), "<n_A>")
    n_b = _real(expectation(state, bob.total_number), "<n_B>")
    lhs = float(sum(terms))
    rhs = (g_a * n_a + g_b * n_b) / 2
    return WitnessReport(
        term_x=terms[0],
        term_y=terms[1],
        term_z=terms[2],
        lhs=lhs,
        rhs=rhs,
        witness=lhs - rhs,
        n_alice=n_a,
        n_bob=n_b,
        tail_mass=leak,
        gains=None if gains is None else (g_a, g_b),
        cutoffs=space.cutoffs,
        convention=alice.convention(),
    )


def gain_adjusted_criterion(state, alice: StokesSet, bob: StokesSet, g_a: float, g_b: float, tail_tol: float = OPERATOR_TOL) -> WitnessReport:
    if g_a <= 0 or g_b <= 0:
        raise FockError(f"gains must be positive, got g_a={g_a}, g_b={g_b}")
    return evaluate_criterion(state, alice, bob, gains=(g_a, g_b), tail_tol=tail_tol)


def calibrated_sy_signs(lam: float = 0.5, cutoff: int = 6) -> tuple:
    """Pick the (Alice, Bob) ``S_y`` signs that null the left side on two TMSS.

    Bob's sign is pinned to ``SY_SIGN``; Alice's is whichever makes
    ``<(J_y + S_y)^2>`` vanish on the correlated state.
    """
    psi = make_psi1(lam, cutoff, tail_tol=None)
    best = None
    for s in (1, -1):
        alice, bob = psi1_stokes(psi.space, (s, SY_SIGN))
        ty = second_moment(psi, bob.sy + alice.sy)
        if best is None or ty < best[1]:
            best = (s, ty)
    return best[0], SY_SIGN


# ---------------------------------------------------------------------------
# proof-chain quantities
# ---------------------------------------------------------------------------


def proof_chain(state, alice: StokesSet, bob: StokesSet) -> dict:
    """Pieces of the separability argument, evaluated on ``state``.

    ``S~ = (S_x, -S_y, S_z)`` pairs with ``J`` so that the left side equals
    ``<J^2> + <S^2> - 2 <J . S~>``.
    """
    j2 = _real(expectation(state, bob.casimir()), "<J^2>")
    s2 = _real(expectation(state, alice.casimir()), "<S^2>")
    s_tilde = (alice.sx, -alice.sy, alice.sz)
    cross = sum(_real(expectation(state, j @ s), "<J.S~>") for j, s in zip(bob.components, s_tilde))
    nb_half = bob.total_number / 2
    na_half = alice.total_number / 2
    cas_b = _real(expectation(state, nb_half @ (nb_half + identity(state.space))), "casimir B")
    cas_a = _real(expectation(state, na_half @ (na_half + identity(state.space))), "casimir A")
    mean_j = np.array([_real(expectation(state, j), "<J>") for j in bob.components])
    mean_s = np.array([_real(expectation(state, s), "<S~>") for s in s_tilde])
    return {
        "j2": j2,
        "s2": s2,
        "cross": cross,
        "expanded_lhs": j2 + s2 - 2 * cross,
        "casimir_bob": cas_b,
        "casimir_alice": cas_a,
        "mean_j": mean_j,
        "mean_s_tilde": mean_s,
        "n_alice": _real(expectation(state, alice.total_number), "<n_A>"),
        "n_bob": _real(expectation(state, bob.total_number), "<n_B>"),
    }


# ---------------------------------------------------------------------------
# separable states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    cutoff: int = 4
    min_terms: int = 2
    max_terms: int = 8
    coherent_fraction: float = 0.5
    max_amplitude: float = 1.2
    #: share of terms that sit on the separable boundary (aligned spin-coherent pairs)
    aligned_fraction: float = 0.3


@dataclass(frozen=True, eq=False)
class SeparableSample:
    rho: DensityMatrix
    weights: np.ndarray
    alice_states: tuple = field(default=())
    bob_states: tuple = field(default=())


def _side_state(rng, cfg: SamplerConfig) -> StateVector:
    """Random pure state of one side's two modes with ``n+ + n- <= cutoff``."""
    c = cfg.cutoff
    space = FockSpace.uniform(2, c)
    n_p = space.mode_occupations(0)
    n_m = space.mode_occupations(1)
    allowed = (n_p + n_m) <= c
    if rng.random() < cfg.coherent_fraction:
        alpha = (rng.normal(size=2) + 1j * rng.normal(size=2)) * cfg.max_amplitude / 2
        fact = np.array([factorial(k) for k in range(c + 1)], dtype=float)
        amps = (alpha[0] ** n_p / np.sqrt(fact[n_p])) * (alpha[1] ** n_m / np.sqrt(fact[n_m]))
    else:
        amps = np.zeros(space.dimension, dtype=complex)
        support = np.flatnonzero(allowed)
        k = rng.integers(1, min(5, support.size) + 1)
        pick = rng.choice(support, size=k, replace=False)
        amps[pick] = rng.normal(size=k) + 1j * rng.normal(size=k)
    amps = np.where(allowed, amps, 0)
    return StateVector(space, amps).normalized()


def spin_coherent(n: int, theta: float, phi: float, cutoff: int) -> StateVector:
    """``n`` bosons in the mode ``cos(theta/2) a+^dag + e^(i phi) sin(theta/2) a-^dag``."""
    if not 0 <= n <= cutoff:
        raise FockError(f"n={n} outside 0..{cutoff}")
    space = FockSpace.uniform(2, cutoff)
    amps = np.zeros(space.dimension, dtype=complex)
    u, v = np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)
    for k in range(n + 1):
        amps[space.index((k, n - k))] = np.sqrt(comb(n, k)) * u**k * v ** (n - k)
    return StateVector(space, amps)


def _aligned_pair(rng, cfg: SamplerConfig) -> tuple:
    """Product term with equal spins and ``<J> = <S~>``: it meets the bound with equality."""
    n = int(rng.integers(0, cfg.cutoff + 1))
    theta, phi = np.arccos(rng.uniform(-1, 1)), rng.uniform(0, 2 * np.pi)
    a = spin_coherent(n, theta, phi, cfg.cutoff)
    # conjugation flips <S_y> only, which is exactly S -> S~
    b = StateVector(a.space, a.amplitudes.conj())
    return a, b


def separable_mixture(seed: int, config: SamplerConfig | None = None) -> SeparableSample:
    """Random convex mixture of Alice-Bob product states on ``(b+, a+, b-, a-)``."""
    cfg = config or SamplerConfig()
    rng = np.random.default_rng(seed)
    n_terms = int(rng.integers(cfg.min_terms, cfg.max_terms + 1))
    weights = rng.dirichlet(np.ones(n_terms))
    c = cfg.cutoff
    space = FockSpace.uniform(4, c)
    cols = np.empty((space.dimension, n_terms), dtype=complex)
    alices, bobs = [], []
    for k, w in enumerate(weights):
        if rng.random() < cfg.aligned_fraction:
            a, b = _aligned_pair(rng, cfg)
        else:
            a = _side_state(rng, cfg)
            b = _side_state(rng, cfg)
        alices.append(a)
        bobs.append(b)
        # (b+, b-, a+, a-) -> (b+, a+, b-, a-)
        cols[:, k] = np.sqrt(w) * tensor(b, a).tensor().transpose(0, 2, 1, 3).ravel()
    rho = cols @ cols.conj().T
    return SeparableSample(DensityMatrix(space, rho), weights, tuple(alices), tuple(bobs))


def separable_sampler(seed: int, config: SamplerConfig | None = None) -> DensityMatrix:
    return separable_mixture(seed, config).rho


def reports_to_csv(reports) -> str:
    return csv_text(WitnessReport.CSV_FIELDS, [r.csv_row() for r in reports])
