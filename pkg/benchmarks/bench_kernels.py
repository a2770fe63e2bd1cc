"""Time the numba and numpy flavours of each kernel on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call (JIT compilation) is excluded from timing and reported
separately.  Results are checked for agreement before anything is timed.
"""

import argparse
import time
from timeit import repeat

import numpy as np

from twinfock import _kernels


def _kraus_inputs(rng, a, d, b, nk=3):
    m = rng.normal(size=(a * d * b, 4)) + 1j * rng.normal(size=(a * d * b, 4))
    rho = (m @ m.conj().T).reshape(a, d, b, a, d, b)
    kidx, rows, cols, vals = [], [], [], []
    for k in range(nk):
        # lowering-ladder sparsity, like a loss channel
        for n in range(k, d):
            kidx.append(k)
            rows.append(n - k)
            cols.append(n)
            vals.append(rng.normal())
    return rho, np.asarray(kidx), np.asarray(rows), np.asarray(cols), np.asarray(vals, dtype=complex)


def cases(rng):
    yield "bs_block(N=40)", lambda impl: impl.bs_block(40)

    ca = cb = 24
    blocks = [_kernels.numpy_impl.bs_block(n) for n in range(cb + 1)]
    psi = rng.normal(size=(6, ca + 1, cb + 1, 6)) + 0j
    psi[:, np.add.outer(np.arange(ca + 1), np.arange(cb + 1)) > cb, :] = 0
    yield "pair_blocks(cutoff=24)", lambda impl: impl.pair_blocks(psi, ca, cb, blocks)

    rho, *kargs = _kraus_inputs(rng, 6, 8, 6)
    out = np.zeros_like(rho)

    def kraus(impl):
        out[...] = 0
        return impl.local_kraus(rho, *kargs, out)

    yield "local_kraus(6x8x6)", kraus


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"numba available: {_kernels.HAVE_NUMBA}; active backend: {_kernels.backend_name()}")
    print(f"{'kernel':<26}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}{'jit s':>8}")
    rng = np.random.default_rng(0)
    for name, call in cases(rng):
        t0 = time.perf_counter()
        ref_nb = np.array(call(_kernels.numba_impl))
        jit = time.perf_counter() - t0
        ref_np = np.array(call(_kernels.numpy_impl))
        if not np.allclose(ref_np, ref_nb, atol=1e-9):
            raise SystemExit(f"{name}: flavours disagree")
        t_np = min(repeat(lambda: call(_kernels.numpy_impl), number=args.number, repeat=args.repeat)) / args.number
        t_nb = min(repeat(lambda: call(_kernels.numba_impl), number=args.number, repeat=args.repeat)) / args.number
        print(f"{name:<26}{1e3 * t_np:>11.3f}{1e3 * t_nb:>11.3f}{t_np / t_nb:>8.1f}x{jit:>8.2f}")


if __name__ == "__main__":
    main()
