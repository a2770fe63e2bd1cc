"""Entanglement swapping and distillation by photon counting.

One polarisation sector holds two atom-photon TMSS pairs, ``(a_I, b_I)`` and
``(a_II, b_II)``, ordered ``(a_I, b_I, a_II, b_II)``.  The light modes ``a_I``
and ``a_II`` meet on a balanced beamsplitter and both output ports are counted.
Conditioning on ``(N_I, N_II)`` leaves the atoms in

    sum_n k(n) |n>_{b_I} |N - n>_{b_II},    N = N_I + N_II,

with ``k`` given in closed form by a terminating regularised ``2F1``.  The
module computes ``k`` both from that formula and by brute-force interference
plus projection, and keeps the two routes separate.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .fock import (
    FockError,
    FockSpace,
    NumericalFailure,
    StateVector,
    schmidt_spectrum,
    tensor,
)
from .states import make_tmss
from .witness import WitnessReport, build_stokes, evaluate_criterion

A_I, B_I, A_II, B_II = 0, 1, 2, 3
RELABEL_NOTE = "resting modes relabelled by Fock-index reversal m -> N - m (state-side permutation)"


@dataclass(frozen=True)
class CountOutcome:
    n_i: int
    n_ii: int

    def __post_init__(self):
        if self.n_i < 0 or self.n_ii < 0:
            raise FockError(f"photon counts must be non-negative, got ({self.n_i}, {self.n_ii})")
        object.__setattr__(self, "n_i", int(self.n_i))
        object.__setattr__(self, "n_ii", int(self.n_ii))

    @property
    def total(self) -> int:
        return self.n_i + self.n_ii


@dataclass(frozen=True)
class EmptyState:
    """Placeholder post-state for an outcome that cannot occur."""

    reason: str

    def __bool__(self) -> bool:
        return False


def _outcome(o) -> CountOutcome:
    return o if isinstance(o, CountOutcome) else CountOutcome(*o)


def outcomes_up_to(n_max: int) -> list:
    return [CountOutcome(N - k, k) for N in range(n_max + 1) for k in range(N + 1)]


# ---------------------------------------------------------------------------
# interference and counting (the brute-force route)
# ---------------------------------------------------------------------------


def pair_leak(state: StateVector, mode_a: int, mode_b: int) -> float:
    """Weight on ``n_a + n_b`` beyond what both cutoffs can hold."""
    sp_ = state.space
    tot = sp_.mode_occupations(mode_a) + sp_.mode_occupations(mode_b)
    cap = min(sp_.cutoffs[mode_a], sp_.cutoffs[mode_b])
    return float((np.abs(state.amplitudes[tot > cap]) ** 2).sum())


def beamsplitter_apply(state: StateVector, mode_a: int, mode_b: int, tail_tol: float = 0.0) -> StateVector:
    """Balanced beamsplitter ``a_in -> (a + b)/sqrt2``, ``b_in -> (a - b)/sqrt2``.

    The map conserves ``n_a + n_b``, so it is applied block by block and is
    exact on every block that fits below both cutoffs.
    """
    sp_ = state.space
    mode_a, mode_b = sp_.check_mode(mode_a), sp_.check_mode(mode_b)
    if mode_a == mode_b:
        raise FockError("beamsplitter needs two distinct modes")
    leak = pair_leak(state, mode_a, mode_b)
    if leak > tail_tol:
        raise NumericalFailure("beamsplitter input reaches past the cutoff", leak)
    others = [m for m in range(sp_.mode_count) if m not in (mode_a, mode_b)]
    order = others + [mode_a, mode_b]
    t = np.transpose(state.tensor(), order)
    ca, cb = sp_.cutoffs[mode_a], sp_.cutoffs[mode_b]
    psi = np.ascontiguousarray(t.reshape(-1, ca + 1, cb + 1, 1))
    blocks = [_kernels.bs_block(N) for N in range(min(ca, cb) + 1)]
    out = _kernels.pair_blocks(psi, ca, cb, blocks).reshape(t.shape)
    return StateVector(sp_, np.transpose(out, np.argsort(order)).ravel())


def project_counts(state: StateVector, photon_modes=(A_I, A_II), outcome=(0, 0)):
    """Condition on ``outcome`` photons in ``photon_modes``.

    Returns ``(probability, post_state)`` with the photon modes removed and the
    remainder normalised.  A zero-probability outcome returns ``0.0`` with an
    :class:`EmptyState` carrying the reason.
    """
    outcome = _outcome(outcome)
    sp_ = state.space
    m1, m2 = (sp_.check_mode(m) for m in photon_modes)
    if outcome.n_i > sp_.cutoffs[m1] or outcome.n_ii > sp_.cutoffs[m2] or outcome.total > min(sp_.cutoffs[m1], sp_.cutoffs[m2]):
        raise FockError(f"outcome {outcome} exceeds the cutoff {sp_.cutoffs}")
    index = [slice(None)] * sp_.mode_count
    index[m1] = outcome.n_i
    index[m2] = outcome.n_ii
    rest = state.tensor()[tuple(index)]
    space = FockSpace(tuple(c for m, c in enumerate(sp_.cutoffs) if m not in (m1, m2)))
    prob = float(np.vdot(rest, rest).real)
    if prob == 0.0:
        return 0.0, EmptyState(f"outcome ({outcome.n_i}, {outcome.n_ii}) has zero probability")
    return prob, StateVector(space, rest.ravel() / math.sqrt(prob))


def swap_sector_state(lam: float, n_max: int) -> tuple:
    """Exact sector amplitudes for ``n_I + n_II <= n_max``, and the missing weight.

    The amplitudes are not renormalised, so projected probabilities are exact.
    The second element is the closed-form weight of all ``n_I + n_II > n_max``
    terms, ``1 - sum_{N<=n_max} (N+1)(1-lam^2)^2 lam^(2N)``.
    """
    t = make_tmss(lam, n_max, tail_tol=None, renormalize=False)
    psi = tensor(t, t)  # (a_I, b_I, a_II, b_II)
    tot = psi.space.mode_occupations(A_I) + psi.space.mode_occupations(A_II)
    amps = np.where(tot <= n_max, psi.amplitudes, 0)
    x = lam * lam
    c = n_max + 1
    # sum_{N >= c} (N+1) (1-x)^2 x^N
    tail = (c + 1) * x**c - c * x ** (c + 1)
    return StateVector(psi.space, amps), float(tail)


def oracle_outcome(lam: float, outcome, n_max: int | None = None) -> tuple:
    """Brute-force ``(probability, atomic post-state)`` for one count outcome."""
    outcome = _outcome(outcome)
    n_max = outcome.total if n_max is None else n_max
    psi, _ = swap_sector_state(lam, n_max)
    out = beamsplitter_apply(psi, A_I, A_II)
    return project_counts(out, (A_I, A_II), outcome)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------


def _rgamma_int(m: int) -> Fraction:
    """``1/Gamma(m)`` for integer ``m``; zero at the poles ``m <= 0``."""
    return Fraction(0) if m <= 0 else Fraction(1, math.factorial(m - 1))


def _poch(a: int, k: int) -> int:
    p = 1
    for j in range(k):
        p *= a + j
    return p


def reg_hyp2f1_terminating(a: int, b: int, c: int, z) -> Fraction:
    """Regularised ``2F1(a, b; c; z) / Gamma(c)`` for integer ``a <= 0``.

    The series stops after ``-a`` terms; every term is an exact rational.
    """
    if a > 0:
        raise ValueError("upper parameter a must be a non-positive integer")
    z = Fraction(z)
    total = Fraction(0)
    for k in range(-a + 1):
        rg = _rgamma_int(c + k)
        if rg:
            total += Fraction(_poch(a, k) * _poch(b, k), math.factorial(k)) * rg * z**k
    return total


def k_squared_exact(outcome) -> list:
    """Exact ``k(n)^2`` and signs as ``(Fraction, sign)`` pairs from the closed form."""
    o = _outcome(outcome)
    N, NI, NII = o.total, o.n_i, o.n_ii
    out = []
    for n in range(N + 1):
        f = reg_hyp2f1_terminating(-n, -NI, NII - n + 1, -1)
        sq = Fraction(math.factorial(NII), math.factorial(NI)) * Fraction(
            math.factorial(N - n), math.factorial(n)
        ) * f * f / 2**N
        sign = (-1) ** NI * (1 if f >= 0 else -1)
        out.append((sq, sign))
    return out


def k_coefficients_raw(outcome) -> np.ndarray:
    """Closed-form ``k(n)``, normalised, with the formula's own signs."""
    pairs = k_squared_exact(outcome)
    norm = sum(sq for sq, _ in pairs)
    return np.array([s * math.sqrt(sq / norm) for sq, s in pairs])


def k_coefficients(outcome) -> np.ndarray:
    """Normalised ``k(n)`` with the first non-zero entry made positive."""
    k = k_coefficients_raw(outcome)
    return _fix_phase(k)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-14)
    if nz.size == 0:
        return v
    ph = v[nz[0]] / abs(v[nz[0]])
    return v / ph


def _entropy_from_squares(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log(p))))


def entanglement_entropy(outcome) -> float:
    """Entropy (nats) of the post-selected atomic pair, from the closed form."""
    pairs = k_squared_exact(outcome)
    norm = sum(sq for sq, _ in pairs)
    return _entropy_from_squares([float(sq / norm) for sq, _ in pairs])


def input_entropy(lam: float) -> float:
    """Entanglement of one TMSS sector: ``-ln(1-lam^2) - lam^2/(1-lam^2) ln(lam^2)``."""
    if not 0 <= lam < 1:
        raise FockError(f"lambda must lie in [0, 1), got {lam}")
    if lam == 0:
        return 0.0
    x = lam * lam
    return float(-math.log(1 - x) - x / (1 - x) * math.log(x))


def paper_probability(lam: float, outcome) -> float:
    """The printed closed form ``(1 - lam^2) lam^(N_I + N_II)``, kept verbatim."""
    o = _outcome(outcome)
    return (1 - lam**2) * lam**o.total


def oracle_probability_formula(lam: float, outcome) -> float:
    """``(1 - lam^2)^2 lam^(2N)``, which the brute-force route reproduces."""
    o = _outcome(outcome)
    return (1 - lam**2) ** 2 * lam ** (2 * o.total)


def post_state_coefficients(post: StateVector, total: int) -> np.ndarray:
    """Amplitudes of ``|n, total - n>`` in a two-mode post-selected state."""
    return np.array([post[(n, total - n)] for n in range(total + 1)])


# ---------------------------------------------------------------------------
# records and the figure sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OutcomeRecord:
    lam: float
    outcome: CountOutcome
    prob_numeric: float
    prob_paper_formula: float
    coeffs: np.ndarray
    entropy_nats: float
    input_entropy_nats: float
    post_state: StateVector | None = field(default=None)

    @property
    def entropy_ratio(self) -> float:
        return self.entropy_nats / self.input_entropy_nats if self.input_entropy_nats else math.nan

    @property
    def exceeds_input(self) -> bool:
        return self.entropy_nats >= self.input_entropy_nats

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "n_i": self.outcome.n_i,
            "n_ii": self.outcome.n_ii,
            "prob_numeric": self.prob_numeric,
            "prob_paper_formula": self.prob_paper_formula,
            "coeffs": [float(c) for c in self.coeffs],
            "entropy_nats": self.entropy_nats,
            "input_entropy_nats": self.input_entropy_nats,
            "exceeds_input": self.exceeds_input,
            "post_state": None if self.post_state is None else self.post_state.to_dict(),
            "entropy_ratio": self.entropy_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeRecord":
        return cls(
            lam=d["lam"],
            outcome=CountOutcome(d["n_i"], d["n_ii"]),
            prob_numeric=d["prob_numeric"],
            prob_paper_formula=d["prob_paper_formula"],
            coeffs=np.array(d["coeffs"], dtype=float),
            entropy_nats=d["entropy_nats"],
            input_entropy_nats=d["input_entropy_nats"],
            post_state=None if d.get("post_state") is None else StateVector.from_dict(d["post_state"]),
        )

    def csv_row(self) -> dict:
        return {
            "lambda": self.lam,
            "n_i": self.outcome.n_i,
            "n_ii": self.outcome.n_ii,
            "total_n": self.outcome.total,
            "probability": self.prob_numeric,
            "entropy_nats": self.entropy_nats,
            "input_entropy_nats": self.input_entropy_nats,
            "exceeds_input": self.exceeds_input,
        }


FIG2_HEADER = (
    "lambda", "n_i", "n_ii", "total_n", "probability",
    "entropy_nats", "input_entropy_nats", "exceeds_input",
)


def outcome_records(lam: float, n_max: int, keep_states: bool = True) -> tuple:
    """Records for every outcome with ``N <= n_max`` and the truncated weight."""
    psi, tail = swap_sector_state(lam, n_max)
    out = beamsplitter_apply(psi, A_I, A_II)
    e_in = input_entropy(lam)
    records = []
    for o in outcomes_up_to(n_max):
        prob, post = project_counts(out, (A_I, A_II), o)
        records.append(
            OutcomeRecord(
                lam=float(lam),
                outcome=o,
                prob_numeric=prob,
                prob_paper_formula=paper_probability(lam, o),
                coeffs=k_coefficients(o),
                entropy_nats=entanglement_entropy(o),
                input_entropy_nats=e_in,
                post_state=post if keep_states and post else None,
            )
        )
    return records, tail


def outcome_record(lam: float, outcome) -> OutcomeRecord:
    o = _outcome(outcome)
    prob, post = oracle_outcome(lam, o)
    return OutcomeRecord(
        lam=float(lam),
        outcome=o,
        prob_numeric=prob,
        prob_paper_formula=paper_probability(lam, o),
        coeffs=k_coefficients(o),
        entropy_nats=entanglement_entropy(o),
        input_entropy_nats=input_entropy(lam),
        post_state=post if post else None,
    )


@dataclass(frozen=True)
class Fig2Summary:
    lam: float
    n_max_detect: int
    captured_probability: float
    tail: float
    prob_exceeds_input: float
    input_entropy_nats: float
    paper_formula_sum: float
    paper_formula_series_limit: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Fig2Table:
    records: tuple
    summaries: tuple


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TWINFOCK_THREADS", "1")))
    except ValueError:
        return 1


def figure2_sweep(lams, n_max_detect: int, threads: int | None = None) -> Fig2Table:
    """Probability and entropy of every outcome with ``N <= n_max_detect``."""
    lams = [float(x) for x in lams]
    for lam in lams:
        if not 0 <= lam < 1:
            raise FockError(f"lambda must lie in [0, 1), got {lam}")

    def one(lam):
        recs, tail = outcome_records(lam, n_max_detect, keep_states=False)
        captured = sum(r.prob_numeric for r in recs)
        summary = Fig2Summary(
            lam=lam,
            n_max_detect=n_max_detect,
            captured_probability=captured,
            tail=tail,
            prob_exceeds_input=sum(r.prob_numeric for r in recs if r.exceeds_input),
            input_entropy_nats=input_entropy(lam),
            paper_formula_sum=sum(r.prob_paper_formula for r in recs),
            paper_formula_series_limit=(1 + lam) / (1 - lam),
        )
        return recs, summary

    n = threads or _threads()
    if n > 1 and len(lams) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(one, lams))
    else:
        results = [one(lam) for lam in lams]
    records = tuple(r for recs, _ in results for r in recs)
    return Fig2Table(records, tuple(s for _, s in results))


# ---------------------------------------------------------------------------
# relabelling and the two-condensate witness
# ---------------------------------------------------------------------------


def relabel_resting_modes(state: StateVector, totals, resting=(1, 3), moving=(0, 2)) -> StateVector:
    """Reverse the Fock index ``m -> N - m`` on each resting mode.

    The implied sector of a polarisation with outcome total ``N`` holds at most
    ``N`` atoms in each of its two modes; the map permutes levels ``0..N`` of the
    resting mode and is its own inverse there.  Support on higher levels is an
    error.
    """
    sp_ = state.space
    w = np.abs(state.amplitudes) ** 2
    t = state.tensor()
    for N, rest, mov in zip(totals, resting, moving):
        N = int(N)
        rest = sp_.check_mode(rest)
        mov = sp_.check_mode(mov)
        if N > sp_.cutoffs[rest]:
            raise FockError(f"total {N} exceeds the cutoff of mode {rest}")
        off = (sp_.mode_occupations(rest) > N) | (sp_.mode_occupations(mov) > N)
        if w[off].sum() > 0:
            raise FockError(f"state has support outside the {N}-photon sector of modes {mov}, {rest}")
        perm = np.arange(sp_.dims[rest])
        perm[: N + 1] = N - perm[: N + 1]
        t = np.take(t, perm, axis=rest)
    return StateVector(sp_, t.ravel())


def distilled_state(lam: float, outcome_plus, outcome_minus, source: str = "oracle") -> StateVector:
    """Atomic state of both polarisations after counting, on ``(b+I, b+II, b-I, b-II)``.

    ``source="oracle"`` projects the interfered state; ``"formula"`` uses the
    closed-form ``k`` with its raw signs.
    """
    parts = []
    for o in (_outcome(outcome_plus), _outcome(outcome_minus)):
        if source == "oracle":
            prob, post = oracle_outcome(lam, o)
            if not post:
                raise FockError(post.reason)
        elif source == "formula":
            k = k_coefficients_raw(o)
            amps = np.zeros((o.total + 1, o.total + 1))
            for n in range(o.total + 1):
                amps[n, o.total - n] = k[n]
            post = StateVector(FockSpace.uniform(2, o.total), amps.ravel())
        else:
            raise FockError(f"unknown source {source!r}")
        parts.append(post)
    cap = max(1, _outcome(outcome_plus).total + _outcome(outcome_minus).total)
    return tensor(parts[0].padded((cap, cap)), parts[1].padded((cap, cap)))


def distilled_witness(lam: float, outcome_plus, outcome_minus, source: str = "oracle") -> WitnessReport:
    """Separability test on the relabelled two-condensate state.

    Bob (``J``) is the condensate at rest, Alice (``S``) the moving one.
    """
    op, om = _outcome(outcome_plus), _outcome(outcome_minus)
    psi = distilled_state(lam, op, om, source)
    psi = relabel_resting_modes(psi, (op.total, om.total))
    alice = build_stokes(psi.space, 0, 2, "Alice")
    bob = build_stokes(psi.space, 1, 3, "Bob")
    rep = evaluate_criterion(psi, alice, bob)
    return WitnessReport(**{**rep.__dict__, "note": RELABEL_NOTE})


def schmidt_rank(state: StateVector, cut, tol: float = 1e-12) -> int:
    return int(np.sum(schmidt_spectrum(state, cut) > tol))


__all__ = [
    "CountOutcome",
    "OutcomeRecord",
    "beamsplitter_apply",
    "project_counts",
    "k_coefficients",
    "k_coefficients_raw",
    "entanglement_entropy",
    "input_entropy",
    "figure2_sweep",
    "relabel_resting_modes",
    "distilled_witness",
]
