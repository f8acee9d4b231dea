"""Independent numpy evaluation of the golden values used by the C++ tests.

Run from the repository root:  python3 tests/oracles/goldens.py
Prints the scalar goldens and rewrites tests/golden/*.{csv,txt}.
"""
import math
import pathlib

import numpy as np

GOLDEN = pathlib.Path(__file__).resolve().parent.parent / "golden"

A = np.array([[2.0, 1.0], [0.7, 0.8]])
C = np.array([[1.0, 0.0], [0.0, 2.0]])
Q = 0.6 * np.eye(2)
R = np.diag([0.7, 0.4])


def h(x):
    return A @ x @ A.T + Q


def F(x, gamma):
    g = np.diag(np.array(gamma, dtype=float))
    ct = g @ C
    rt = g @ R @ g.T
    hp = h(x)
    k = hp @ ct.T @ np.linalg.pinv(ct @ hp @ ct.T + rt)
    out = (np.eye(2) - k @ ct) @ hp
    return (out + out.T) / 2


def steady():
    x = np.eye(2)
    for _ in range(10000):
        nx = F(x, (1, 1))
        if np.max(np.abs(nx - x)) <= 1e-13:
            return nx
        x = nx
    raise RuntimeError("no convergence")


def recovery(p0, pbar, tol):
    x = p0
    for k in range(1001):
        if abs(np.trace(x) - np.trace(pbar)) <= tol:
            return k
        x = F(x, (1, 1))
    raise RuntimeError("no recovery")


def g10(v):
    return "%.10g" % v


def main():
    pbar = steady()
    print("Pbar", repr(pbar.tolist()), "trace", repr(np.trace(pbar)))
    print("F(Pbar,(1,0))", repr(F(pbar, (1, 0)).tolist()))
    print("F(Pbar,(0,1))", repr(F(pbar, (0, 1)).tolist()))
    print("h(Pbar)", repr(h(pbar).tolist()), "trace", repr(np.trace(h(pbar))))
    x = pbar
    for _ in range(5):
        x = F(x, (0, 0))
    print("recovery after 5 losses", recovery(x, pbar, 1e-3))
    print("recovery after 1 loss", recovery(h(pbar), pbar, 1e-3))

    rows = ["step,arrivals,trace,p1_1,p1_2,p2_2"]
    x = pbar
    for k in range(21):
        if k > 0:
            gamma = (1, 1) if k > 5 else (0, 0)
            x = F(x, gamma)
            arr = "".join(str(b) for b in gamma)
        else:
            arr = ""
        rows.append(",".join([str(k), arr, g10(np.trace(x)), g10(x[0, 0]), g10(x[0, 1]), g10(x[1, 1])]))
    (GOLDEN / "verify_model_oracle.csv").write_text("\n".join(rows) + "\n")

    # Belief step from B0 under alpha = beta = 0 with the closed-loop powers.
    a0, n0 = np.array([0.3, 0.2]), 0.1
    t = 1.0 - np.exp(-(a0 / n0))
    b0 = np.array([[0.5, 0.5], [0.5, 0.5]])
    b1 = np.column_stack([t, (1 - t) * (b0[:, 0] + b0[:, 1])])
    print("t", repr(t.tolist()), "B1", repr(b1.tolist()))
    print("reward(B0) pre", repr(float((b0 * np.arange(2)).sum())), "reward(B1)", repr(float((b1 * np.arange(2)).sum())))
    t_att = 1.0 - math.exp(-0.3 / (0.5 + 0.1))
    print("t attacked device 1", repr(t_att))

    # 4-8-16 rectifier network: parameters from a seeded numpy generator.
    rng = np.random.default_rng(20240601)
    sizes = [4, 8, 16]
    params = []
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append((w, b))
        params.extend(w.reshape(-1).tolist())
        params.extend(b.tolist())
    x = np.array([0.5, -1.25, 2.0, 0.75])
    for i, (w, b) in enumerate(layers):
        x = w @ x + b
        if i + 1 < len(layers):
            x = np.maximum(x, 0.0)
    lines = [str(len(sizes))] + [str(s) for s in sizes] + [repr(p) for p in params]
    (GOLDEN / "net_4_8_16.txt").write_text("\n".join(lines) + "\n")
    (GOLDEN / "net_4_8_16_forward.txt").write_text("\n".join(repr(v) for v in x.tolist()) + "\n")
    print("forward", repr(x.tolist()))


if __name__ == "__main__":
    main()
