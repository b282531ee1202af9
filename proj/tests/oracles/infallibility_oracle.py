"""Independent vectorised simulation of the canonical sweep (numpy RNG, not the
library's streams). Estimates the distribution of X_N and X at checkpoints."""
import sys
import numpy as np

def simulate(theta_a, theta_b, c, x0, n, reps, seed, checkpoints=()):
    rng = np.random.default_rng(seed)
    x = np.full(reps, x0)
    out = {}
    minx = x.copy()
    for k in range(1, n + 1):
        g = c / (c + k)
        u = rng.random(reps)
        ea = rng.random(reps) < theta_a
        eb = rng.random(reps) < theta_b
        play_a = u <= x
        x = np.where(play_a & ea, x + g * (1 - x), np.where(~play_a & eb, (1 - g) * x, x))
        minx = np.minimum(minx, x)
        if k in checkpoints:
            out[k] = x.copy()
    return x, minx, out

if __name__ == "__main__":
    c = float(sys.argv[1]) if len(sys.argv) > 1 else 2.0
    ta, tb, x0 = (0.7, 0.4, 0.5) if c == 2.0 else (0.9, 0.8, 0.1)
    x, minx, cp = simulate(ta, tb, c, x0, 100000, 1000, 12345, checkpoints=(1000, 10000))
    for k, v in cp.items():
        print(k, "lo", np.mean(v < 1e-3), "hi", np.mean(v > 0.9), "mid", np.mean((v >= 1e-3) & (v <= 0.9)))
    print("N=1e5 lo", np.mean(x < 1e-3), "hi", np.mean(x > 0.9), "mid", np.mean((x >= 1e-3) & (x <= 0.9)))
    print("smallest finals", np.sort(x)[:8])
    print("replicas whose path dipped below 1e-3:", np.sum(minx < 1e-3))
