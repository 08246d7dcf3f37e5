"""Smoke test for the sope_kernel extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math
import random

import sope_kernel as sk


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    angles = sk.base_angles(128)
    assert angles[0] == 1.0 and close(angles[16], 0.1)

    bands = sk.allocate_bands((24, 2, 3, 3), 128)
    assert bands == {"r": (0, 4), "theta": (4, 10), "phi": (10, 16), "t": (16, 64)}
    try:
        sk.allocate_bands((3, 2, 2, 2), 128)
    except ValueError as e:
        print("indivisible ratio rejected:", e)
    else:
        raise AssertionError("3:2:2:2 should not divide 64 pairs")

    r, theta, phi = sk.cart_to_sph(1.0, 1.0, 1.0)
    assert close(r, math.sqrt(3)) and close(phi, math.pi / 4)
    x, y, z = sk.sph_to_cart(r, theta, phi)
    assert close(x, 1.0, 1e-9) and close(z, 1.0, 1e-9)

    rng = random.Random(0)
    d = 16
    q = [rng.gauss(0, 1) for _ in range(d)]
    k = [rng.gauss(0, 1) for _ in range(d)]
    a = sk.PositionIndex(0.0, 1.0, 0.5, 0.2)
    b = sk.PositionIndex(5.0, -0.3, 2.0, 1.0)

    cfg = sk.EncodingConfig("sope", d=d, ratio=(1, 1, 1, 1))
    fast = cfg.score(q, k, a, b)
    dense = sk.dense_score(q, k, cfg.phases(a), cfg.phases(b))
    assert close(fast, dense), (fast, dense)
    assert close(sum(cfg.component_scores(q, k, a, b)), fast)

    degenerate = sk.EncodingConfig("sope", d=d, ratio=(1, 0, 0, 0), mixing=False)
    assert close(degenerate.score(q, k, a, b), sk.rope_score(q, k, a.t, b.t))

    encoded = cfg.encode([q, k], [a, b])
    for v, w in zip([q, k], encoded):
        assert close(math.hypot(*v), math.hypot(*w))

    out = cfg.attend([q, k], [q, k], [a, b], [a, b])
    assert all(close(sum(row), 1.0, 1e-9) for row in out["attention"])

    uniform = sk.bias_metrics([[0.25] * 4] * 4, ["p"] * 4, ["p"] * 4)
    assert all(close(h, math.log(4)) for h in uniform["row_entropy"])

    report = sk.analyze(synthetic=32, seed=2024)
    assert report.startswith("sope-kernel report v1")
    table = sk.ablate(synthetic=16)
    assert sum(line.split(",")[0] in ("8:6:9:9", "1:1:1:1", "5:1:1:1", "24:2:3:3") for line in table.splitlines()) == 4

    print(f"sope_kernel {sk.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
