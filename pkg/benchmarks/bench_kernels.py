"""Time the bi-LSTM kernels and one GA scoring sweep under both backends.

Usage::

    python3 benchmarks/bench_kernels.py [--hidden 50] [--length 40] [--repeat 200]

Each backend runs in its own interpreter because the choice is fixed at
import time by ``MELODYGA_DISABLE_NUMBA``.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def measure(hidden, length, repeat):
    from melodyga import backend_name
    from melodyga.chromosome import random_melody_uniform
    from melodyga.neural import LstmModel, lstm_score
    from melodyga.neural import kernels
    from melodyga.neural.model import unflatten

    rng = np.random.default_rng(0)
    model = LstmModel.initialize(hidden, rng)
    model.params["w_out"][:] = rng.normal(0, 0.1, 2 * hidden)
    p = model.params
    X = rng.normal(size=(length, 4))
    grad = np.zeros_like(model.theta)
    g = unflatten(grad, hidden)
    args = (p["Wx"], p["Wh"], p["b"], p["w_out"], p["b_out"], X)

    def step():
        s, cache = kernels.bilstm_forward(*args)
        kernels.bilstm_backward(p["Wh"], p["w_out"], X, cache, 1.0, g["Wx"], g["Wh"], g["b"], g["w_out"], g["b_out"])

    melodies = [random_melody_uniform(length, rng) for _ in range(repeat)]
    step()  # compile / warm caches
    lstm_score(model, melodies[0])

    def best_of(fn, rounds=3):
        times = []
        for _ in range(rounds):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    t_train = best_of(lambda: [step() for _ in range(repeat)]) / repeat
    t_score = best_of(lambda: [kernels.bilstm_score(*args) for _ in range(repeat)]) / repeat
    t_ga = best_of(lambda: [lstm_score(model, c) for c in melodies]) / repeat
    return {"backend": backend_name(), "train_step_ms": 1e3 * t_train, "score_ms": 1e3 * t_score,
            "lstm_score_ms": 1e3 * t_ga}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hidden", type=int, default=50)
    ap.add_argument("--length", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps(measure(args.hidden, args.length, args.repeat)))
        return

    rows = []
    for disable in ("0", "1"):
        env = dict(os.environ, MELODYGA_DISABLE_NUMBA=disable)
        cmd = [sys.executable, __file__, "--child", "--hidden", str(args.hidden), "--length", str(args.length),
               "--repeat", str(args.repeat)]
        out = subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout
        rows.append(json.loads(out.strip().splitlines()[-1]))

    print(f"hidden {args.hidden}, sequence length {args.length}, {args.repeat} repeats (best of 3)")
    print(f"{'backend':<8} {'fwd+bwd ms':>11} {'score ms':>9} {'lstm_score ms':>14}")
    for r in rows:
        print(f"{r['backend']:<8} {r['train_step_ms']:11.3f} {r['score_ms']:9.3f} {r['lstm_score_ms']:14.3f}")
    nb, np_ = rows
    print(f"speedup  {np_['train_step_ms'] / nb['train_step_ms']:11.2f} {np_['score_ms'] / nb['score_ms']:9.2f} "
          f"{np_['lstm_score_ms'] / nb['lstm_score_ms']:14.2f}")


if __name__ == "__main__":
    main()
