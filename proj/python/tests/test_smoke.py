import numpy as np
import pytest

import predfilt as pf


def test_qr_stack_reproduces_gram():
    rng = np.random.default_rng(0)
    blocks = [rng.standard_normal((3, 5)), rng.standard_normal((4, 5))]
    r = pf.qr_stack(blocks)
    gram = sum(b.T @ b for b in blocks)
    assert np.allclose(r.T @ r, gram, atol=1e-10)
    assert np.allclose(np.tril(r, -1), 0.0)
    assert np.all(np.diag(r) >= 0)


def test_lowrank_project_is_best_rank_d():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((8, 6))
    w = pf.lowrank_project([a], 3)
    u, s, vt = np.linalg.svd(a.T @ a)
    best = (u[:, :3] * s[:3]) @ vt[:3]
    assert w.shape == (3, 6)
    assert np.allclose(w.T @ w, best, atol=1e-9)


def test_jacobian_matches_finite_differences():
    spec = pf.NetworkSpec(2, [4], 1, "elu")
    theta = pf.init_params(spec, 3)
    x = np.array([0.3, -0.7])
    h, l = pf.jacobians(spec, theta, x)
    j = np.hstack([h, l])
    eps = 1e-6
    fd = np.empty_like(j)
    for i in range(theta.size):
        d = np.zeros_like(theta)
        d[i] = eps
        fd[:, i] = (pf.forward(spec, theta + d, x) - pf.forward(spec, theta - d, x)) / (2 * eps)
    assert np.allclose(j, fd, atol=1e-7)


@pytest.mark.parametrize("kind", ["dense", "lrkf", "hilofi", "lolofi"])
def test_filter_learns_and_shrinks(kind):
    spec = pf.NetworkSpec(1, [8], 1)
    f = pf.Filter(spec, kind, seed=0, rank=10, r=0.1)
    x = np.array([0.5])
    _, var0 = f.predict(x)
    for _ in range(30):
        f.step(x, np.array([2.0]))
    mean, var = f.predict(x)
    assert abs(mean[0] - 2.0) < 0.2
    assert var[0, 0] < var0[0, 0]
    cov = f.covariance
    assert np.allclose(cov, cov.T)
    assert np.linalg.eigvalsh(cov).min() > -1e-10


def test_pbayes_action_in_range():
    spec = pf.NetworkSpec(2, [8], 4)
    f = pf.Filter(spec, "hilofi", rank=5)
    assert 0 <= f.pbayes_action(np.zeros(2), 4, 7) < 4


def test_bo_functions_at_optimum():
    assert pf.bo_function("ackley", 2, np.full(2, 0.5)) == pytest.approx(0.0, abs=1e-12)
    c = pf.lowdisc_candidates(3, 16, 0)
    assert c.shape == (3, 16)
    assert np.all((c >= 0) & (c <= 1))


def test_run_writes_summary(tmp_path):
    cfg = 'steps = 20\nseeds = [0, 1]\n[net]\nhidden = [4]\n[ranks]\nd_hidden = 3\n'
    summary, seeds = pf.run(cfg, str(tmp_path))
    assert (tmp_path / "summary.csv").exists()
    assert [s for s, _ in seeds] == [0, 1]
    assert seeds[0][1]["steps"] == 20


def test_bad_config_raises():
    with pytest.raises(pf.ConfigError):
        pf.run("steps = 0\n", "unused")


def test_verify_linalg_passes():
    assert all(status == "PASS" for _, status, _ in pf.verify("linalg"))
