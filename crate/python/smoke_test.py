"""Quick check that the extension imports and its main entry points agree
with closed-form values."""

import math

import ergodim


def main():
    cat = ergodim.System.cat_map()
    lam = math.log((3 + math.sqrt(5)) / 2)
    chi = ergodim.estimate_chi(cat, ergodim.Oracle.lebesgue(), [0.2, 0.1], n_max=16, sample_points=200, probes=32, seed=1)
    assert abs(chi["value"] / lam - 1) < 0.03, chi["value"]

    fair = ergodim.Oracle.bernoulli([0.5, 0.5])
    assert abs(ergodim.block_entropy_rate(fair, 12) - math.log(2)) < 1e-12

    bk = ergodim.brin_katok(ergodim.System.dyadic_shift(2, 64), fair, [0.5, 0.25], [8, 16, 24, 32])
    assert abs(bk["slope"] - math.log(2)) < 1e-9
    assert bk["lower"]["value"] <= bk["upper"]["value"]

    t = 2 * math.sqrt(0.01)
    assert abs(ergodim.delta_constant(0.01) - (-(t * math.log(t) + (1 - t) * math.log(1 - t)))) < 1e-12
    assert ergodim.hamming_ball(20, 0.04)["stirling_holds"]

    rep = ergodim.verify(
        ergodim.System.dyadic_shift(2, 48), fair, 0.5, [2.0 ** -k for k in range(1, 9)], [0.5, 0.25],
        base_points=3, budget=256,
    )
    assert rep["holds"] and abs(rep["dim"] - 1) < 1e-9

    try:
        ergodim.Oracle.bernoulli([0.7, 0.7])
    except ValueError:
        pass
    else:
        raise AssertionError("invalid probabilities accepted")

    print(f"ergodim {ergodim.__version__}: chi={chi['value']:.4f}, bk slope={bk['slope']:.6f}, dim={rep['dim']:.3f}  ok")


if __name__ == "__main__":
    main()
