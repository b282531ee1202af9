"""Block maxima of alpha_n = R_n / phi(n) for rotation and i.i.d. pairs."""
import numpy as np

N = 100000
n = np.arange(1, N + 1, dtype=np.float64)
phi = n / np.log(n + 2) ** 2


def rotation_kappa(theta):
    return np.floor(n * theta) - n * theta


def blocks(R):
    a = R / phi
    a[:2] = 0
    prev = a[N // 4 - 1:N // 2].max()
    last = a[N // 2 - 1:].max()
    return prev, last, last / prev


print("rotation", blocks(np.maximum(abs(rotation_kappa(0.7)), abs(rotation_kappa(0.4)))))
rng = np.random.default_rng(1)
for s in range(5):
    rng = np.random.default_rng(s)
    ka = np.cumsum((rng.random(N) < 0.5) - 0.5)
    kb = np.cumsum((rng.random(N) < 0.5) - 0.5)
    print("iid", s, blocks(np.maximum(abs(ka), abs(kb))))


def ratio_span(R, lo_div):
    a = R / phi
    a[:2] = 0
    prev = a[N // lo_div - 1:N // 2].max()
    last = a[N // 2 - 1:].max()
    return last / prev


if __name__ == "__main__":
    for lo_div in (4, 16, 64):
        r = []
        for s in range(300):
            rng = np.random.default_rng(1000 + s)
            ka = np.cumsum((rng.random(N) < 0.7) - 0.7)
            kb = np.cumsum((rng.random(N) < 0.4) - 0.4)
            r.append(ratio_span(np.maximum(abs(ka), abs(kb)), lo_div))
        r = np.array(r)
        print(lo_div, "frac<=0.95:", (r <= 0.95).mean(), "frac>=1:", (r >= 1).mean(), "median", np.median(r))
