import numpy as np
import pytest

from chaoscast import _pykernels, backend
from chaoscast.synth import (
    LORENZ63,
    LORENZ96,
    SynthError,
    SystemSpec,
    add_impulses,
    integrate,
)


class TestIntegrate:
    def test_lorenz63_bounded(self):
        spec = SystemSpec(LORENZ63, dt=0.01, n_steps=100_000, burn_in=0,
                          initial=(1.0, 1.0, 1.0))
        frame = integrate(spec)
        assert frame.length == 100_000
        assert np.max(np.abs(frame.column("x"))) < 100.0

    def test_rho_zero_decays_to_origin(self):
        spec = SystemSpec(LORENZ63, rho=0.0, dt=0.01, n_steps=5000, burn_in=0,
                          initial=(1.0, 1.0, 1.0))
        frame = integrate(spec)
        assert np.linalg.norm(frame.values[-1]) < 1e-3

    def test_fourth_order_convergence(self):
        # halving dt should shrink the endpoint error by ~2^4
        init = (1.0, 1.0, 1.0)
        horizon = 1.0

        def endpoint(dt):
            n = int(round(horizon / dt))
            spec = SystemSpec(LORENZ63, dt=dt, n_steps=n, burn_in=0, initial=init)
            return integrate(spec).values[-1]

        ref = endpoint(1.0 / 6400)
        e1 = np.linalg.norm(endpoint(1.0 / 400) - ref)
        e2 = np.linalg.norm(endpoint(1.0 / 800) - ref)
        assert e1 / e2 == pytest.approx(16.0, rel=0.3)

    def test_deterministic_under_seed(self):
        spec = SystemSpec(LORENZ96, dt=0.05, n_steps=500, burn_in=100, seed=3)
        f1, f2 = integrate(spec), integrate(spec)
        np.testing.assert_array_equal(f1.values, f2.values)

    def test_lorenz96_positive_lyapunov_proxy(self):
        spec = SystemSpec(LORENZ96, dimension=8, forcing=8.0, dt=0.05,
                          n_steps=2000, burn_in=500, seed=1)
        base = integrate(spec)
        state0 = None
        # restart from the attractor with a tiny split
        s = base.values[0].copy()
        split = s.copy()
        split[0] += 1e-8
        t1 = backend.lorenz96_trajectory(s, 8.0, 0.05, 2000)
        t2 = backend.lorenz96_trajectory(split, 8.0, 0.05, 2000)
        gap = np.linalg.norm(t1 - t2, axis=1)
        assert gap[0] < 1e-7
        assert np.max(gap) > 1e-2

    def test_dimension_too_small(self):
        with pytest.raises(SynthError):
            SystemSpec(LORENZ96, dimension=3)

    def test_backend_parity(self):
        s0 = np.array([1.0, 1.0, 1.0])
        a = backend.lorenz63_trajectory(s0, 10.0, 28.0, 8 / 3, 0.01, 2000)
        b = _pykernels.lorenz63_trajectory(s0, 10.0, 28.0, 8 / 3, 0.01, 2000)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
        s0 = 8.0 + 0.01 * np.arange(6)
        a = backend.lorenz96_trajectory(s0, 8.0, 0.05, 2000)
        b = _pykernels.lorenz96_trajectory(s0, 8.0, 0.05, 2000)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


class TestAddImpulses:
    def _frame(self, T=2000, seed=0):
        spec = SystemSpec(LORENZ63, dt=0.01, n_steps=T, burn_in=100, seed=seed)
        return integrate(spec)

    def test_rate_zero_unchanged(self):
        frame = self._frame(500)
        noisy, track = add_impulses(frame, rate=0.0, magnitude=1.0, decay=0.5, seed=1)
        np.testing.assert_array_equal(noisy.values, frame.values)
        np.testing.assert_array_equal(track, 0.0)

    def test_single_impulse_geometric_decay(self):
        frame = self._frame(200)
        # rate 1 for exactly one step is awkward; instead force one arrival by
        # seeding until a lone early hit appears in a rate-scan
        noisy, track = add_impulses(frame, rate=1.0 / 200, magnitude=2.0,
                                    decay=0.5, seed=2, columns=("x",))
        col = track[:, 0]
        hits = np.flatnonzero(np.abs(col) > 0)
        assert hits.size > 0
        t0 = hits[0]
        # between arrivals the track halves each step
        for t in range(t0, min(t0 + 4, 200 - 1)):
            nxt = col[t + 1]
            if abs(nxt - 0.5 * col[t]) > 1e-12:
                break  # a second arrival interrupted the geometric tail
            assert nxt == pytest.approx(0.5 * col[t], rel=1e-12)

    def test_poisson_count(self):
        frame = self._frame(100_000)
        _, track = add_impulses(frame, rate=0.01, magnitude=1.0, decay=0.9,
                                seed=2, columns=("x",))
        # count arrivals as up-jumps inconsistent with pure decay
        col = track[:, 0]
        arrivals = np.abs(col - 0.9 * np.concatenate(([0.0], col[:-1]))) > 1e-12
        count = int(arrivals.sum())
        assert abs(count - 1000) < 4 * np.sqrt(1000)

    def test_clean_frame_recoverable(self):
        frame = self._frame(300)
        noisy, track = add_impulses(frame, rate=0.05, magnitude=3.0, decay=0.8, seed=3)
        np.testing.assert_allclose(noisy.values - track, frame.values,
                                   rtol=0, atol=1e-12)

    def test_deterministic(self):
        frame = self._frame(300)
        n1, t1 = add_impulses(frame, 0.05, 1.0, 0.9, seed=9)
        n2, t2 = add_impulses(frame, 0.05, 1.0, 0.9, seed=9)
        np.testing.assert_array_equal(n1.values, n2.values)
        np.testing.assert_array_equal(t1, t2)

    def test_parameter_validation(self):
        frame = self._frame(100)
        with pytest.raises(SynthError):
            add_impulses(frame, rate=1.5, magnitude=1.0, decay=0.5)
        with pytest.raises(SynthError):
            add_impulses(frame, rate=0.1, magnitude=1.0, decay=1.0)
