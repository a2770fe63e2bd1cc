"""Truncated multimode Fock space.

States live on the tensor product of single-mode spaces ``span{|0>, ..., |n_max>}``
in C (row-major) order, so mode 0 is the most significant index.  Ladder
operators use hard truncation: ``a^dag`` sends the top level to zero.  Every
state reports its *tail mass*, the probability sitting on a cutoff level, so
callers can decide whether a truncated result is trustworthy.

Operators are stored as ``scipy.sparse`` CSR matrices.  Ladder-built
operators have a handful of non-zeros per column and the four-mode spaces used
downstream reach millions of basis states, where dense storage is impossible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import _kernels

OPERATOR_TOL = 1e-10
NORM_TOL = 1e-12


class FockError(ValueError):
    """Invalid arguments for a Fock-space operation."""


class SpaceMismatch(FockError):
    pass


class NumericalFailure(RuntimeError):
    """A truncated computation exceeded its accuracy budget."""

    def __init__(self, message, tail_mass):
        super().__init__(f"{message} (tail mass {tail_mass:.3e})")
        self.tail_mass = float(tail_mass)


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FockSpace:
    cutoffs: tuple

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if not cutoffs:
            raise FockError("a Fock space needs at least one mode")
        if any(c < 0 for c in cutoffs):
            raise FockError(f"cutoffs must be non-negative, got {cutoffs}")
        object.__setattr__(self, "cutoffs", cutoffs)

    @classmethod
    def uniform(cls, mode_count: int, cutoff: int) -> "FockSpace":
        if mode_count < 1:
            raise FockError("mode_count must be positive")
        return cls((cutoff,) * mode_count)

    @property
    def mode_count(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dimension(self) -> int:
        return math.prod(self.dims)

    def stride(self, mode: int) -> int:
        return math.prod(self.dims[mode + 1 :])

    def check_mode(self, mode) -> int:
        if not (0 <= int(mode) < self.mode_count):
            raise FockError(f"mode {mode} out of range for {self.mode_count} modes")
        return int(mode)

    def index(self, occupation: Sequence[int]) -> int:
        occupation = tuple(int(n) for n in occupation)
        if len(occupation) != self.mode_count:
            raise FockError("occupation tuple has the wrong length")
        if any(n < 0 or n > c for n, c in zip(occupation, self.cutoffs)):
            raise FockError(f"occupation {occupation} outside cutoffs {self.cutoffs}")
        return int(np.ravel_multi_index(occupation, self.dims))

    def occupation(self, index: int) -> tuple:
        if not (0 <= index < self.dimension):
            raise FockError(f"index {index} out of range")
        return tuple(int(n) for n in np.unravel_index(index, self.dims))

    def mode_occupations(self, mode: int) -> np.ndarray:
        """Occupation of ``mode`` for every basis index."""
        mode = self.check_mode(mode)
        idx = np.arange(self.dimension, dtype=np.int64)
        return (idx // self.stride(mode)) % self.dims[mode]

    def __mul__(self, other: "FockSpace") -> "FockSpace":
        return FockSpace(self.cutoffs + other.cutoffs)


def auto_cutoff(lam: float, tol: float = NORM_TOL) -> int:
    """Smallest ``n_max`` with ``lam**(2*(n_max+1)) <= tol``.

    This is the geometric tail bound of a two-mode squeezed vacuum: the weight
    beyond ``n_max`` is exactly ``lam**(2*(n_max+1))``.
    """
    if not 0 <= lam < 1:
        raise FockError(f"lambda must lie in [0, 1), got {lam}")
    if lam == 0:
        return 0
    n = math.ceil(math.log(tol) / (2 * math.log(lam))) - 1
    n = max(n, 0)
    # guard against log rounding on either side of the bound
    while n > 0 and lam ** (2 * n) <= tol:
        n -= 1
    while lam ** (2 * (n + 1)) > tol:
        n += 1
    return n


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def _tail_mask(space: FockSpace) -> np.ndarray:
    mask = np.zeros(space.dimension, dtype=bool)
    for m in range(space.mode_count):
        mask |= space.mode_occupations(m) == space.cutoffs[m]
    return mask


@dataclass(frozen=True, eq=False)
class StateVector:
    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != self.space.dimension:
            raise FockError(
                f"{amps.size} amplitudes for a space of dimension {self.space.dimension}"
            )
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def basis(cls, space: FockSpace, occupation: Sequence[int]) -> "StateVector":
        amps = np.zeros(space.dimension, dtype=complex)
        amps[space.index(occupation)] = 1.0
        return cls(space, amps)

    @classmethod
    def vacuum(cls, space: FockSpace) -> "StateVector":
        return cls.basis(space, (0,) * space.mode_count)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2 - 1.0) <= tol

    @property
    def tail_mass(self) -> float:
        p = np.abs(self.amplitudes) ** 2
        return float(p[_tail_mask(self.space)].sum())

    def normalized(self) -> "StateVector":
        n2 = self.norm2
        if n2 == 0:
            raise FockError("cannot normalise the zero vector")
        return StateVector(self.space, self.amplitudes / math.sqrt(n2))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)

    def padded(self, cutoffs: Sequence[int]) -> "StateVector":
        """Same state embedded in a space with larger (or equal) cutoffs."""
        new = FockSpace(tuple(cutoffs))
        if new.mode_count != self.space.mode_count or any(
            c < o for c, o in zip(new.cutoffs, self.space.cutoffs)
        ):
            raise FockError("padding can only enlarge every cutoff")
        t = np.zeros(new.dims, dtype=complex)
        t[tuple(slice(0, d) for d in self.space.dims)] = self.tensor()
        return StateVector(new, t)

    def __getitem__(self, occupation) -> complex:
        return complex(self.amplitudes[self.space.index(occupation)])

    def to_dict(self, threshold: float = 1e-15) -> dict:
        """JSON-ready form: occupation tuple -> ``[re, im]``, tiny amplitudes dropped."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > threshold)
        return {
            "cutoffs": list(self.space.cutoffs),
            "amplitudes": [
                [list(self.space.occupation(int(i))), [float(self.amplitudes[i].real), float(self.amplitudes[i].imag)]]
                for i in nz
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StateVector":
        space = FockSpace(tuple(data["cutoffs"]))
        amps = np.zeros(space.dimension, dtype=complex)
        for occ, (re, im) in data["amplitudes"]:
            amps[space.index(occ)] = complex(re, im)
        return cls(space, amps)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: FockSpace
    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        d = self.space.dimension
        if rho.shape != (d, d):
            raise FockError(f"density matrix shape {rho.shape} does not match dimension {d}")
        object.__setattr__(self, "entries", _frozen(rho))

    @classmethod
    def _adopt(cls, space: FockSpace, rho: np.ndarray) -> "DensityMatrix":
        """Wrap a freshly built complex array without copying it."""
        if rho.shape != (space.dimension, space.dimension) or rho.dtype != complex:
            raise FockError("adopted array has the wrong shape or dtype")
        obj = cls.__new__(cls)
        rho.setflags(write=False)
        object.__setattr__(obj, "space", space)
        object.__setattr__(obj, "entries", rho)
        return obj

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls._adopt(state.space, np.outer(psi, psi.conj()))

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence["DensityMatrix | StateVector"]) -> "DensityMatrix":
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise FockError("mixture weights must be non-negative")
        space = states[0].space
        rho = np.zeros((space.dimension, space.dimension), dtype=complex)
        for w, s in zip(weights, states):
            if s.space != space:
                raise SpaceMismatch("mixture components live in different spaces")
            s = as_density(s)
            rho += w * s.entries
        return cls(space, rho)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def purity(self) -> float:
        return float(np.vdot(self.entries, self.entries).real)

    @property
    def tail_mass(self) -> float:
        return float(np.diagonal(self.entries).real[_tail_mask(self.space)].sum())

    def tensor(self) -> np.ndarray:
        return self.entries.reshape(self.space.dims * 2)

    def validate(self, tol: float = NORM_TOL, eig_tol: float = OPERATOR_TOL) -> "DensityMatrix":
        """Raise unless Hermitian, unit trace and positive semidefinite."""
        rho = self.entries
        herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
        if herm > tol:
            raise FockError(f"density matrix not Hermitian (deviation {herm:.2e})")
        if abs(self.trace - 1.0) > tol:
            raise FockError(f"density matrix trace {self.trace!r} is not 1")
        lo = float(np.linalg.eigvalsh(rho).min())
        if lo < -eig_tol:
            raise FockError(f"density matrix has negative eigenvalue {lo:.2e}")
        return self


def as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, StateVector):
        return DensityMatrix.from_state(state)
    raise TypeError(f"expected a StateVector or DensityMatrix, got {type(state).__name__}")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeOperator:
    space: FockSpace
    entries: sp.csr_matrix
    label: str = ""

    def __post_init__(self):
        m = sp.csr_matrix(self.entries, dtype=complex)
        d = self.space.dimension
        if m.shape != (d, d):
            raise FockError(f"operator shape {m.shape} does not match dimension {d}")
        m.eliminate_zeros()
        object.__setattr__(self, "entries", m)

    def _check(self, other):
        if other.space != self.space:
            raise SpaceMismatch("operators act on different spaces")

    def dag(self) -> "ModeOperator":
        return ModeOperator(self.space, self.entries.conj().T.tocsr(), f"({self.label})^dag")

    def dense(self) -> np.ndarray:
        return self.entries.toarray()

    def __add__(self, other):
        self._check(other)
        return ModeOperator(self.space, self.entries + other.entries, f"{self.label} + {other.label}")

    def __sub__(self, other):
        self._check(other)
        return ModeOperator(self.space, self.entries - other.entries, f"{self.label} - {other.label}")

    def __neg__(self):
        return ModeOperator(self.space, -self.entries, f"-{self.label}")

    def __mul__(self, scalar):
        if isinstance(scalar, ModeOperator):
            return NotImplemented
        return ModeOperator(self.space, self.entries * scalar, f"{scalar}*{self.label}")

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            self._check(other)
            return ModeOperator(self.space, self.entries @ other.entries, f"{self.label} {other.label}")
        if isinstance(other, StateVector):
            self._check(other)
            return StateVector(self.space, self.entries @ other.amplitudes)
        return NotImplemented

    def hermiticity_defect(self) -> float:
        diff = self.entries - self.entries.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def is_hermitian(self, tol: float = OPERATOR_TOL) -> bool:
        return self.hermiticity_defect() <= tol


def identity(space: FockSpace) -> ModeOperator:
    return ModeOperator(space, sp.identity(space.dimension, dtype=complex, format="csr"), "1")


def mode_operator(space: FockSpace, mode: int, kind: str) -> ModeOperator:
    """Ladder or number operator on one mode, identity elsewhere.

    ``kind`` is ``"annihilate"``, ``"create"`` or ``"number"``.
    """
    mode = space.check_mode(mode)
    n = space.mode_occupations(mode)
    d = space.dimension
    idx = np.arange(d, dtype=np.int64)
    stride = space.stride(mode)
    if kind == "number":
        m = sp.diags(n.astype(complex), format="csr")
        return ModeOperator(space, m, f"n{mode}")
    if kind == "annihilate":
        src = idx[n > 0]
        vals = np.sqrt(n[n > 0].astype(float))
        m = sp.csr_matrix((vals.astype(complex), (src - stride, src)), shape=(d, d))
        return ModeOperator(space, m, f"a{mode}")
    if kind == "create":
        top = space.cutoffs[mode]
        src = idx[n < top]
        vals = np.sqrt(n[n < top].astype(float) + 1.0)
        m = sp.csr_matrix((vals.astype(complex), (src + stride, src)), shape=(d, d))
        return ModeOperator(space, m, f"a{mode}^dag")
    raise FockError(f"unknown operator kind {kind!r}")


def hopping(space: FockSpace, to_mode: int, from_mode: int) -> ModeOperator:
    """``a_to^dag a_from`` with hard truncation, built without a sparse product."""
    i = space.check_mode(to_mode)
    j = space.check_mode(from_mode)
    if i == j:
        return mode_operator(space, i, "number")
    ni = space.mode_occupations(i)
    nj = space.mode_occupations(j)
    ok = (nj > 0) & (ni < space.cutoffs[i])
    src = np.flatnonzero(ok)
    dst = src + space.stride(i) - space.stride(j)
    vals = np.sqrt((ni[ok] + 1.0) * nj[ok])
    d = space.dimension
    m = sp.csr_matrix((vals.astype(complex), (dst, src)), shape=(d, d))
    return ModeOperator(space, m, f"a{i}^dag a{j}")


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------


def tensor(*items):
    """Tensor product of states, density matrices or operators (left = high modes)."""
    if not items:
        raise FockError("tensor() needs at least one factor")
    first = items[0]
    space = first.space
    for it in items[1:]:
        space = space * it.space
    if all(isinstance(it, StateVector) for it in items):
        amps = first.amplitudes
        for it in items[1:]:
            amps = np.kron(amps, it.amplitudes)
        return StateVector(space, amps)
    if all(isinstance(it, ModeOperator) for it in items):
        m = first.entries
        for it in items[1:]:
            m = sp.kron(m, it.entries, format="csr")
        return ModeOperator(space, m, " x ".join(it.label for it in items))
    rho = as_density(first).entries
    for it in items[1:]:
        rho = np.kron(rho, as_density(it).entries)
    return DensityMatrix(space, rho)


# ---------------------------------------------------------------------------
# expectations and reductions
# ---------------------------------------------------------------------------


def _require_normalized(state, tol):
    if isinstance(state, StateVector):
        if not state.is_normalized(tol):
            raise FockError(f"state is not normalised (norm^2 = {state.norm2!r})")
    elif abs(state.trace - 1.0) > tol:
        raise FockError(f"density matrix is not normalised (trace = {state.trace!r})")


def expectation(state, op: ModeOperator, tol: float | None = None) -> complex:
    """``<psi|O|psi>`` or ``Tr(rho O)``."""
    if state.space != op.space:
        raise SpaceMismatch("state and operator act on different spaces")
    if isinstance(state, StateVector):
        _require_normalized(state, NORM_TOL if tol is None else tol)
        psi = state.amplitudes
        return complex(np.vdot(psi, op.entries @ psi))
    _require_normalized(state, OPERATOR_TOL if tol is None else tol)
    coo = op.entries.tocoo()
    # Tr(rho O) = sum_{(r,c)} O[r, c] rho[c, r]
    return complex(np.sum(coo.data * state.entries[coo.col, coo.row]))


def second_moment(state, op: ModeOperator, tol: float | None = None) -> float:
    """``<O^2>`` for Hermitian ``O``; uses ``||O psi||^2`` on pure states."""
    if isinstance(state, StateVector):
        if state.space != op.space:
            raise SpaceMismatch("state and operator act on different spaces")
        _require_normalized(state, NORM_TOL if tol is None else tol)
        v = op.entries @ state.amplitudes
        return float(np.vdot(v, v).real)
    return float(expectation(state, op @ op, tol).real)


def _keep_axes(space, keep):
    keep = sorted({space.check_mode(m) for m in keep})
    if not keep or len(keep) == space.mode_count:
        raise FockError("keep must be a non-empty proper subset of the modes")
    rest = [m for m in range(space.mode_count) if m not in keep]
    return keep, rest


def partial_trace(state, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on the modes in ``keep`` (kept in ascending order)."""
    space = state.space
    keep, rest = _keep_axes(space, keep)
    sub = FockSpace(tuple(space.cutoffs[m] for m in keep))
    dk = sub.dimension
    if isinstance(state, StateVector):
        M = np.transpose(state.tensor(), keep + rest).reshape(dk, -1)
        return DensityMatrix(sub, M @ M.conj().T)
    M = space.mode_count
    t = state.tensor()
    t = np.transpose(t, keep + rest + [M + m for m in keep] + [M + m for m in rest])
    dr = space.dimension // dk
    t = t.reshape(dk, dr, dk, dr)
    return DensityMatrix(sub, np.einsum("ajbj->ab", t))


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel given by Kraus operators embedded in the full space.

    ``local`` holds the same operators as small matrices on the single mode
    ``acts_on[0]`` when the channel is local to one mode; ``apply_channel``
    then skips the embedded matrices and works on the density tensor.
    """

    kraus_ops: tuple
    acts_on: tuple
    local: tuple | None = field(default=None)

    @property
    def space(self) -> FockSpace:
        return self.kraus_ops[0].space

    def completeness_defect(self) -> np.ndarray:
        """Diagonal of ``1 - sum K^dag K`` in the basis of the acted-on mode(s)."""
        if self.local is not None:
            s = sum(K.conj().T @ K for K in self.local)
            return np.real(1.0 - np.diag(s))
        s = sum((K.entries.conj().T @ K.entries) for K in self.kraus_ops)
        return np.real(1.0 - s.diagonal())

    def completeness_error(self) -> float:
        """Largest entry of ``|sum K^dag K - 1|`` (full matrix, not only the diagonal)."""
        if self.local is not None:
            s = sum(K.conj().T @ K for K in self.local)
            return float(np.max(np.abs(s - np.eye(s.shape[0]))))
        s = sum((K.entries.conj().T @ K.entries) for K in self.kraus_ops)
        diff = s - sp.identity(s.shape[0], format="csr")
        return float(abs(diff).max()) if diff.nnz else 0.0


def apply_channel(rho: DensityMatrix, ch: KrausChannel, tail_tol: float = OPERATOR_TOL) -> DensityMatrix:
    """``sum_k K rho K^dag``.

    Raises :class:`NumericalFailure` when ``rho`` puts more than ``tail_tol``
    weight on levels where the truncated Kraus set is not trace preserving.
    """
    if rho.space != ch.space:
        raise SpaceMismatch("channel and state act on different spaces")
    defect = ch.completeness_defect()
    space = rho.space
    diag = np.diagonal(rho.entries).real
    if ch.local is not None:
        mode = ch.acts_on[0]
        pops = np.bincount(space.mode_occupations(mode), weights=diag, minlength=space.dims[mode])
        leak = float(np.abs(defect) @ pops)
    else:
        leak = float(np.abs(defect) @ diag)
    if leak > tail_tol:
        raise NumericalFailure("state support reaches levels where the channel leaks", leak)

    if ch.local is None:
        out = np.zeros_like(rho.entries)
        for K in ch.kraus_ops:
            k = K.entries
            out += k @ (k @ rho.entries.conj().T).conj().T
        return DensityMatrix._adopt(space, out)

    mode = ch.acts_on[0]
    d = space.dims[mode]
    A = math.prod(space.dims[:mode])
    B = space.dimension // (A * d)
    view = rho.entries.reshape(A, d, B, A, d, B)
    kidx, rows, cols, vals = [], [], [], []
    for k, K in enumerate(ch.local):
        r, c = np.nonzero(K)
        kidx.extend([k] * len(r))
        rows.extend(r)
        cols.extend(c)
        vals.extend(K[r, c])
    out = np.zeros((A, d, B, A, d, B), dtype=complex)
    _kernels.local_kraus(
        view,
        np.asarray(kidx, dtype=np.int64),
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=complex),
        out,
    )
    return DensityMatrix._adopt(space, out.reshape(space.dimension, space.dimension))


def local_channel(space: FockSpace, mode: int, local_ops: Sequence[np.ndarray]) -> KrausChannel:
    """Embed single-mode Kraus matrices acting on ``mode``."""
    mode = space.check_mode(mode)
    d = space.dims[mode]
    left = sp.identity(math.prod(space.dims[:mode]), format="csr")
    right = sp.identity(space.dimension // (left.shape[0] * d), format="csr")
    ops = []
    for k, K in enumerate(local_ops):
        K = np.asarray(K, dtype=complex)
        if K.shape != (d, d):
            raise FockError(f"local Kraus operator has shape {K.shape}, expected {(d, d)}")
        full = sp.kron(sp.kron(left, sp.csr_matrix(K)), right, format="csr")
        ops.append(ModeOperator(space, full, f"K{k}[{mode}]"))
    return KrausChannel(tuple(ops), (mode,), tuple(np.asarray(K, dtype=complex) for K in local_ops))


# ---------------------------------------------------------------------------
# dynamics and entanglement
# ---------------------------------------------------------------------------


def evolve(state: StateVector, generator: ModeOperator, t: float, tail_tol: float | None = None) -> StateVector:
    """``exp(-i t G) |psi>`` on the truncated space.

    The result is renormalised.  With ``tail_tol`` set, a result whose tail mass
    exceeds it raises :class:`NumericalFailure`.
    """
    if state.space != generator.space:
        raise SpaceMismatch("state and generator act on different spaces")
    if not generator.is_hermitian():
        raise FockError(f"generator is not Hermitian (defect {generator.hermiticity_defect():.2e})")
    if t == 0:
        return state
    psi = expm_multiply(-1j * t * generator.entries.tocsc(), state.amplitudes)
    out = StateVector(state.space, psi).normalized()
    if tail_tol is not None and out.tail_mass > tail_tol:
        raise NumericalFailure("evolution pushed weight onto the cutoff", out.tail_mass)
    return out


def schmidt_spectrum(state, cut: Iterable[int]) -> np.ndarray:
    """Eigenvalues of the reduced state on ``cut``, descending."""
    if isinstance(state, DensityMatrix):
        if state.purity < 1 - 1e-8:
            raise FockError(f"state is mixed (purity {state.purity:.6f})")
        vals = np.linalg.eigvalsh(partial_trace(state, cut).entries)
        return np.sort(np.clip(vals, 0, None))[::-1]
    keep, rest = _keep_axes(state.space, cut)
    dk = math.prod(state.space.dims[m] for m in keep)
    M = np.transpose(state.tensor(), keep + rest).reshape(dk, -1)
    s = np.linalg.svd(M, compute_uv=False)
    return s**2 / state.norm2


def schmidt_entropy(state, cut: Iterable[int]) -> float:
    """Entanglement entropy (nats) of a pure state across ``cut``."""
    lam = schmidt_spectrum(state, cut)
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.space != b.space:
        raise SpaceMismatch("states live in different spaces")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 / (a.norm2 * b.norm2))
