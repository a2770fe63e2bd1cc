"""Hot inner loops, in two interchangeable flavours.

Every kernel exists as a numba ``@njit`` function and as a vectorised numpy
function with the same signature and semantics.  The active flavour is chosen
once at import time: numba is used when it imports cleanly, unless the
environment variable ``TWINFOCK_DISABLE_NUMBA`` is set to a truthy value.

Both flavours stay importable (``numpy_impl`` / ``numba_impl``) so the test
suite and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

import os
import types
from math import comb, factorial

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_DISABLE = os.environ.get("TWINFOCK_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _DISABLE not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# numpy flavour
# ---------------------------------------------------------------------------


def _bs_block_numpy(total):
    """Balanced beamsplitter matrix on the ``total``-photon block.

    Entry ``[p, n]`` is the amplitude of ``|p, total-p>`` in the image of
    ``|n, total-n>`` under ``a1^dag -> (a1^dag + a2^dag)/sqrt2``,
    ``a2^dag -> (a1^dag - a2^dag)/sqrt2``.
    """
    N = total
    out = np.zeros((N + 1, N + 1))
    fact = np.array([float(factorial(k)) for k in range(N + 1)])
    for n in range(N + 1):
        i = np.arange(n + 1)
        ci = np.array([comb(n, k) for k in range(n + 1)], dtype=float)
        j = np.arange(N - n + 1)
        cj = np.array([comb(N - n, k) for k in range(N - n + 1)], dtype=float)
        sign_j = (-1.0) ** (N - n - j)
        # p = i + j collects all terms landing on |p, N-p>
        terms = np.outer(ci, cj * sign_j)
        p = np.add.outer(i, j)
        acc = np.zeros(N + 1)
        np.add.at(acc, p.ravel(), terms.ravel())
        out[:, n] = acc * np.sqrt(fact * fact[::-1]) / np.sqrt(fact[n] * fact[N - n])
    return out * 2.0 ** (-N / 2)


def _pair_blocks_numpy(psi, cutoff_a, cutoff_b, blocks):
    """Apply a number-conserving two-mode map block by block.

    ``psi`` has shape ``(L, cutoff_a + 1, cutoff_b + 1, R)``; ``blocks[N]`` is
    the ``(N+1, N+1)`` matrix acting on the ``N``-photon block, indexed by the
    occupation of the first mode.  Blocks with ``N > max(len(blocks) - 1)``
    must be empty in ``psi``.
    """
    out = np.zeros_like(psi)
    for N, U in enumerate(blocks):
        lo = max(0, N - cutoff_b)
        hi = min(N, cutoff_a)
        if lo > hi:
            continue
        n = np.arange(lo, hi + 1)
        src = psi[:, n, N - n, :]  # (L, k, R)
        # target rows share the same admissible range
        U_sub = U[lo : hi + 1, lo : hi + 1]
        out[:, n, N - n, :] = np.einsum("pk,lkr->lpr", U_sub, src)
    return out


def _local_kraus_numpy(rho, kidx, rows, cols, vals, out):
    """Accumulate ``sum_k K_k rho K_k^dag`` for single-mode Kraus operators.

    ``rho`` and ``out`` are viewed as ``(A, d, B, A, d, B)``.  Kraus matrix
    ``k`` is given sparsely by the entries ``x`` with ``kidx[x] == k``:
    ``K_k[rows[x], cols[x]] = vals[x]``.
    """
    for k in np.unique(kidx):
        sel = np.flatnonzero(kidx == k)
        for x in sel:
            for y in sel:
                w = vals[x] * np.conj(vals[y])
                out[:, rows[x], :, :, rows[y], :] += w * rho[:, cols[x], :, :, cols[y], :]
    return out


numpy_impl = types.SimpleNamespace(
    bs_block=_bs_block_numpy,
    pair_blocks=_pair_blocks_numpy,
    local_kraus=_local_kraus_numpy,
)


# ---------------------------------------------------------------------------
# numba flavour
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @nb.njit(cache=True)
    def _bs_block_numba(total):
        N = total
        out = np.zeros((N + 1, N + 1))
        logf = np.zeros(N + 1)
        for k in range(1, N + 1):
            logf[k] = logf[k - 1] + np.log(k)
        scale = 2.0 ** (-N / 2.0)
        for n in range(N + 1):
            m = N - n
            for i in range(n + 1):
                ci = np.exp(logf[n] - logf[i] - logf[n - i])
                for j in range(m + 1):
                    cj = np.exp(logf[m] - logf[j] - logf[m - j])
                    sgn = 1.0 if (m - j) % 2 == 0 else -1.0
                    p = i + j
                    out[p, n] += sgn * ci * cj * np.exp(
                        0.5 * (logf[p] + logf[N - p] - logf[n] - logf[m])
                    )
        return out * scale

    @nb.njit(cache=True)
    def _pair_blocks_core(psi, cutoff_a, cutoff_b, flat_blocks, offsets, nblocks):
        L = psi.shape[0]
        R = psi.shape[3]
        out = np.zeros_like(psi)
        for N in range(nblocks):
            lo = max(0, N - cutoff_b)
            hi = min(N, cutoff_a)
            if lo > hi:
                continue
            base = offsets[N]
            for p in range(lo, hi + 1):
                for n in range(lo, hi + 1):
                    u = flat_blocks[base + p * (N + 1) + n]
                    if u == 0.0:
                        continue
                    for l in range(L):
                        for r in range(R):
                            out[l, p, N - p, r] += u * psi[l, n, N - n, r]
        return out

    def _pair_blocks_numba(psi, cutoff_a, cutoff_b, blocks):
        sizes = np.array([(N + 1) ** 2 for N in range(len(blocks))], dtype=np.int64)
        offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
        flat = (
            np.concatenate([np.ascontiguousarray(U, dtype=float).ravel() for U in blocks])
            if blocks
            else np.zeros(0)
        )
        return _pair_blocks_core(
            np.ascontiguousarray(psi), cutoff_a, cutoff_b, flat, offsets, len(blocks)
        )

    @nb.njit(cache=True)
    def _local_kraus_core(rho, kidx, rows, cols, vals, out):
        A = rho.shape[0]
        B = rho.shape[2]
        m = kidx.shape[0]
        for x in range(m):
            r1 = rows[x]
            c1 = cols[x]
            for y in range(m):
                if kidx[y] != kidx[x]:
                    continue
                r2 = rows[y]
                c2 = cols[y]
                w = vals[x] * np.conj(vals[y])
                for a in range(A):
                    for b in range(B):
                        for a2 in range(A):
                            for b2 in range(B):
                                out[a, r1, b, a2, r2, b2] += w * rho[a, c1, b, a2, c2, b2]
        return out

    def _local_kraus_numba(rho, kidx, rows, cols, vals, out):
        return _local_kraus_core(rho, kidx, rows, cols, vals.astype(np.complex128), out)

    numba_impl = types.SimpleNamespace(
        bs_block=_bs_block_numba,
        pair_blocks=_pair_blocks_numba,
        local_kraus=_local_kraus_numba,
    )
else:  # pragma: no cover
    numba_impl = numpy_impl

_active = numba_impl if USE_NUMBA else numpy_impl

bs_block = _active.bs_block
pair_blocks = _active.pair_blocks
local_kraus = _active.local_kraus


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
