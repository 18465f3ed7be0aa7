"""Cross-checks between the compiled kernels and the pure-Python fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from onlineirl import _kernels_py
from onlineirl.backend import kernel_backend

try:
    from onlineirl import _kernels
except ImportError:
    _kernels = None

BACKENDS = [("python", _kernels_py)] + ([("compiled", _kernels)] if _kernels else [])


def make_instance(seed, n_states=9, n_actions=3):
    rng = np.random.default_rng(seed)
    p = np.ascontiguousarray(rng.dirichlet(np.ones(n_states), size=(n_states, n_actions)))
    r = rng.normal(size=n_states)
    gamma = float(rng.uniform(0.6, 0.95))
    return p, r, gamma, rng


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
class TestBackendAgreement:
    @pytest.mark.parametrize("seed", range(5))
    def test_exact_vi_matches(self, seed):
        p, r, gamma, _ = make_instance(seed)
        v0 = np.zeros(p.shape[0])
        v_c, it_c, res_c = _kernels.exact_vi(p, r, gamma, 1e-10, 10_000, v0)
        v_p, it_p, res_p = _kernels_py.exact_vi(p, r, gamma, 1e-10, 10_000, v0)
        np.testing.assert_allclose(v_c, v_p, atol=1e-12)
        assert it_c == it_p
        assert res_c == pytest.approx(res_p, abs=1e-13)

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("kind,k", [(0, 4.0), (0, 100.0), (1, 4.0), (1, 100.0)])
    def test_approx_vi_matches(self, seed, kind, k):
        p, r, gamma, _ = make_instance(seed)
        if kind == 0:
            r = np.abs(r)  # keep pnorm in its nonnegative regime
            if gamma * p.shape[1] ** (1.0 / k) >= 1.0:
                gamma = 0.5
        v0 = np.zeros(p.shape[0])
        out_c = _kernels.approx_vi(p, r, gamma, kind, k, 1e-10, 10_000, v0, 1e-8)
        out_p = _kernels_py.approx_vi(p, r, gamma, kind, k, 1e-10, 10_000, v0, 1e-8)
        np.testing.assert_allclose(out_c[0], out_p[0], atol=1e-12)
        assert out_c[1] == out_p[1]  # sweep counts
        assert out_c[3] == out_p[3]  # clamp counts

    @pytest.mark.parametrize("seed", range(5))
    def test_grad_vi_matches(self, seed):
        p, r, gamma, rng = make_instance(seed)
        n = p.shape[0]
        w = rng.dirichlet(np.ones(p.shape[1]), size=n)
        a = np.ascontiguousarray(np.einsum("sa,sax->sx", w, p))
        b = np.ascontiguousarray(rng.normal(size=(n, 4)))
        dv0 = np.zeros_like(b)
        dv_c, it_c, _ = _kernels.grad_vi(a, b, gamma, 1e-12, 10_000, dv0)
        dv_p, it_p, _ = _kernels_py.grad_vi(a, b, gamma, 1e-12, 10_000, dv0)
        np.testing.assert_allclose(dv_c, dv_p, atol=1e-10)
        assert it_c == it_p

    def test_divergence_detected_by_both(self):
        a = np.full((2, 2), 1.2)
        b = np.ones((2, 1))
        for mod in (_kernels, _kernels_py):
            dv, it, res = mod.grad_vi(a, b, 0.99, 1e-8, 10_000, np.zeros((2, 1)))
            assert not res < 1e15 or it == 10_000


class TestSelection:
    def test_this_environment_prefers_compiled(self):
        if _kernels is not None:
            assert kernel_backend() == "compiled"
        else:
            assert kernel_backend() == "python"

    @pytest.mark.parametrize("choice,expected", [("python", "python"), ("auto", None)])
    def test_env_var_selection(self, choice, expected):
        code = (
            "import onlineirl; import sys; sys.stdout.write(onlineirl.kernel_backend())"
        )
        env = dict(os.environ, ONLINEIRL_KERNELS=choice)
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert out.returncode == 0, out.stderr
        if expected:
            assert out.stdout == expected
        else:
            assert out.stdout in ("python", "compiled")

    def test_unknown_choice_fails_loudly(self):
        code = "import onlineirl"
        env = dict(os.environ, ONLINEIRL_KERNELS="fortran")
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert out.returncode != 0
        assert "ONLINEIRL_KERNELS" in out.stderr


@pytest.mark.parametrize("name,mod", BACKENDS)
class TestKernelContracts:
    def test_exact_vi_geometric_series(self, name, mod):
        p = np.ones((1, 1, 1))
        v, it, res = mod.exact_vi(p, np.array([1.0]), 0.9, 1e-9, 10_000, np.zeros(1))
        assert v[0] == pytest.approx(10.0, abs=1e-7)
        assert res <= 1e-9

    def test_approx_vi_counts_pnorm_clamps(self, name, mod):
        p = np.ones((1, 2, 1)) * np.array([[[1.0], [1.0]]])
        out = mod.approx_vi(p, np.array([-1.0]), 0.0, 0, 5.0, 1e-12, 50, np.zeros(1), 1e-8)
        assert out[3] > 0  # negative backups were clamped

    def test_grad_vi_solves_the_linear_system(self, name, mod):
        rng = np.random.default_rng(11)
        a = rng.dirichlet(np.ones(6), size=6)
        b = rng.normal(size=(6, 3))
        gamma = 0.8
        dv, _, res = mod.grad_vi(a, b, gamma, 1e-13, 10_000, np.zeros((6, 3)))
        expected = np.linalg.solve(np.eye(6) - gamma * a, b)
        np.testing.assert_allclose(dv, expected, atol=1e-11)
