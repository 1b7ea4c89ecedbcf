"""Compare the compiled recurrence kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--steps 400] [--hidden 64]

Times the LSTM forward+backward pair (the training hot loop) on both
backends, then a full model gradient step, and reports the speedup.
"""

import argparse
import time

import numpy as np

from elqa.model import kernels
from elqa.model.config import EncoderConfig
from elqa.model.network import SpanReader
from elqa.model.vocab import Vocabulary


def bench_kernel(backend: str, steps: int, hidden: int, repeats: int) -> float:
    kernels.set_backend(backend)
    rng = np.random.default_rng(0)
    xg = np.ascontiguousarray(rng.normal(size=(steps, 4 * hidden)))
    wh = np.ascontiguousarray(rng.normal(size=(4 * hidden, hidden)) * 0.3)
    h0 = np.zeros(hidden)
    c0 = np.zeros(hidden)
    dh = np.ascontiguousarray(rng.normal(size=(steps, hidden)))
    # warm-up
    h, c, gates = kernels.lstm_forward(xg, wh, h0, c0)
    kernels.lstm_backward(wh, gates, h, c, h0, c0, dh)
    start = time.perf_counter()
    for _ in range(repeats):
        h, c, gates = kernels.lstm_forward(xg, wh, h0, c0)
        kernels.lstm_backward(wh, gates, h, c, h0, c0, dh)
    return (time.perf_counter() - start) / repeats


def bench_model_step(backend: str, steps: int, hidden: int, repeats: int) -> float:
    kernels.set_backend(backend)
    words = [f"w{i}" for i in range(200)]
    vocab = Vocabulary(words)
    model = SpanReader(
        EncoderConfig(embedding_dim=hidden, hidden_dim=hidden, num_layers=1),
        vocab,
        rng=np.random.default_rng(1),
        zero_bilinear=False,
    )
    rng = np.random.default_rng(2)
    ctx = [words[i] for i in rng.integers(0, len(words), size=steps)]
    q = [words[i] for i in rng.integers(0, len(words), size=12)]
    model.loss_and_grads(ctx, q, 5, 9, train=False)  # warm-up
    start = time.perf_counter()
    for _ in range(repeats):
        model.loss_and_grads(ctx, q, 5, 9, train=False)
    return (time.perf_counter() - start) / repeats


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=400)
    parser.add_argument("--hidden", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()

    if not kernels.HAVE_COMPILED:
        print("compiled extension not built; only the python backend is available")

    print(f"workload: T={args.steps}, H={args.hidden}, {args.repeats} repeats\n")
    rows = []
    for backend in ("python", "compiled") if kernels.HAVE_COMPILED else ("python",):
        k = bench_kernel(backend, args.steps, args.hidden, args.repeats)
        m = bench_model_step(backend, args.steps, args.hidden, args.repeats)
        rows.append((backend, k, m))
        print(f"{backend:>9}:  lstm fwd+bwd {k * 1e3:8.2f} ms   model step {m * 1e3:8.2f} ms")
    if len(rows) == 2:
        print(f"\nspeedup (python/compiled): kernel {rows[0][1] / rows[1][1]:.1f}x, "
              f"model step {rows[0][2] / rows[1][2]:.1f}x")


if __name__ == "__main__":
    main()
