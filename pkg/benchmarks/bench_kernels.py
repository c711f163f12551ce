"""Compiled vs pure-numpy kernels, timed through the public API.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numpy rows swap ``sounderlab._kernels`` bindings for the entries in
``numpy_impl``, the same functions selected by SOUNDERLAB_DISABLE_NUMBA=1.
"""

import argparse
from contextlib import contextmanager
import time

import numpy as np

from sounderlab import _kernels
from sounderlab.channel import ChannelModel, MultipathTap
from sounderlab.pipeline import simulate_received
from sounderlab.pnseq import DEFAULT_TAPS, PnConfig, circular_autocorrelation, generate
from sounderlab.sounder import SounderConfig, sliding_correlate_direct


@contextmanager
def numpy_path():
    saved = {k: getattr(_kernels, k) for k in _kernels.numpy_impl}
    for k, fn in _kernels.numpy_impl.items():
        setattr(_kernels, k, fn)
    try:
        yield
    finally:
        for k, fn in saved.items():
            setattr(_kernels, k, fn)


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    seq12 = generate(PnConfig(12, DEFAULT_TAPS[12]))
    cfg = SounderConfig(1e6, 1e6 * (1 - 1 / 100), PnConfig(7, chip_rate_hz=1e6), 8)
    rx = simulate_received(cfg, ChannelModel((MultipathTap(0, 0), MultipathTap(5e3, -3)), 0.0))
    return [
        ("lfsr generate N=5..12",
         lambda: [generate(PnConfig(n, t)) for n, t in sorted(DEFAULT_TAPS.items())]),
        ("circular autocorrelation L=4095", lambda: circular_autocorrelation(seq12)),
        ("direct correlator L=127 gamma=100", lambda: sliding_correlate_direct(rx, cfg)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.USE_NUMBA:
        raise SystemExit("numba path disabled or unavailable; nothing to compare")
    rows = []
    for name, fn in cases():
        t_nb = best_of(fn, args.repeat)
        with numpy_path():
            t_np = best_of(fn, args.repeat)
        rows.append((name, t_nb, t_np))
    w = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{w}}  {'numba [ms]':>11}  {'numpy [ms]':>11}  {'speedup':>8}")
    for name, a, b in rows:
        print(f"{name:<{w}}  {a * 1e3:11.3f}  {b * 1e3:11.3f}  {b / a:7.1f}x")


if __name__ == "__main__":
    main()
