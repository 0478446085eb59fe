"""Smoke test for the wnuc_py extension.

Build and install first:
    pip install --no-build-isolation -e crates/wnuc-py
then run:
    python3 python/smoke_test.py
"""

import math

import numpy as np

import wnuc_py as w


def cosine(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def main():
    prior = w.SubspacePrior(10, 3, 3, [0.0196, 0.0156, 0.005], [0.0258, 0.0146, 0.0098])
    assert prior.block_widths() == [3, 3, 0, 4]

    w_star, v_star, m_hat, _ = w.optimize_weights(prior)
    cos = cosine(w_star.as_tuple(), [4.8808e-4, 0.0907, 0.1002, 18.6213])
    assert cos >= 0.99, cos
    nuc = w.nuclear_threshold(10, 3, 3)
    assert m_hat < nuc["m_hat"]
    print(f"w* = {w_star}, m_hat = {m_hat:.4f} (nuclear {nuc['m_hat']:.4f}), cosine {cos:.6f}")

    # equal weights reduce to the nuclear closed form
    for t in (0.5, 1.0, 2.0):
        a = w.psi_weighted((t, t, t), prior)
        b = w.psi_nuclear(t, 10, 3, 3)
        assert abs(a - b) <= 1e-8 * abs(b)

    inst = w.make_prior_instance(prior, 1)
    x = np.array(inst.x)
    angles = w.principal_angles(inst.u, inst.u_tilde)
    assert np.allclose(angles, prior.theta_u, atol=1e-6), angles

    # h_w round trip and self-adjointness
    wv = w.WeightVector(0.3, 0.7, 1.2)
    z = np.array(w.gaussian_matrix(10, 10, 2))
    hz = w.apply_h(wv, inst.u_tilde, inst.v_tilde, z.tolist())
    back = np.array(w.apply_h_inverse(wv, inst.u_tilde, inst.v_tilde, hz))
    assert np.abs(back - z).max() < 1e-10

    # singular values agree with numpy
    sv = w.singular_values(z.tolist())
    assert np.allclose(sv, np.linalg.svd(z, compute_uv=False), rtol=1e-12)

    # recovery from 40 measurements with the optimal weights
    a, y = w.measure(x.tolist(), 40, 3)
    assert np.allclose(np.array(a) @ x.flatten(order="F"), y)
    xh, info = w.solve_weighted_nuclear(a, y, w_star, inst.u_tilde, inst.v_tilde)
    err = w.relative_error(x.tolist(), xh)
    assert err < 1e-2, (err, info)
    print(f"weighted recovery at m=40: rel err {err:.2e}, {info['iterations']} iterations")

    # Marchenko-Pastur helpers
    assert abs(w.phi(0.0, 1.0) - 1.0) < 1e-6
    assert abs(w.varphi(0.5) - w.phi(0.5, 1.0)) < 1e-6
    g = np.array(w.gaussian_matrix(100, 200, 6)) / math.sqrt(200)
    ks = w.ks_distance_mp(np.linalg.svd(g, compute_uv=False).tolist(), 0.5)
    assert ks < 0.1, ks

    rows = w.phase_curve(prior, [None, w_star], [20, 100], 4, 9)
    assert all(r[-1][1] == 4 for r in rows)

    try:
        w.SubspacePrior(4, 3, 3, [1.0] * 3, [1.0] * 3)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid prior accepted")

    print(f"wnuc_py {w.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
