import math

import numpy as np
import pytest

from qbsde import (ForwardModel, PathBundle, SimulationError, ValidationError,
                   brownian_model, first_exit, geometric_brownian_model,
                   scaled_brownian_model, simulate)
from qbsde.sde import brownian_increments


def test_same_seed_reproduces_bundle():
    m = scaled_brownian_model(0.1, 0.5)
    b1 = simulate(m, 0.0, 1.0, 1.0, 50, 200, seed=42)
    b2 = simulate(m, 0.0, 1.0, 1.0, 50, 200, seed=42)
    assert np.array_equal(b1.paths, b2.paths)
    assert np.array_equal(b1.increments, b2.increments)
    b3 = simulate(m, 0.0, 1.0, 1.0, 50, 200, seed=43)
    assert not np.array_equal(b1.paths, b3.paths)


def test_common_random_numbers_share_noise():
    m1 = scaled_brownian_model(0.0, 1.0)
    m2 = scaled_brownian_model(0.3, 1.0)
    b1 = simulate(m1, 0.0, 0.0, 1.0, 20, 100, seed=7)
    b2 = simulate(m2, 0.0, 0.0, 1.0, 20, 100, seed=999,
                  increments=b1.increments)
    assert np.array_equal(b1.increments, b2.increments)
    # constant-coefficient models differ exactly by the drift shift
    t = b1.times[None, :]
    assert np.allclose(b2.paths - b1.paths, 0.3 * t, atol=1e-12)


def test_increment_moments():
    times, dB = brownian_increments(0.0, 2.0, 40, 50_000, seed=3)
    dt = 2.0 / 40
    assert times[0] == 0.0 and times[-1] == 2.0 and len(times) == 41
    assert abs(float(np.mean(dB))) < 4 * math.sqrt(dt / dB.size)
    assert float(np.var(dB)) == pytest.approx(dt, rel=0.02)


def test_exact_law_for_constant_coefficients():
    # Euler is exact for dX = mu dt + sigma dB
    mu, sigma = 0.3, 0.7
    b = simulate(scaled_brownian_model(mu, sigma), 0.0, 1.0, 1.0, 32, 50_000,
                 seed=5)
    xT = b.paths[:, -1]
    se = sigma / math.sqrt(len(xT))
    assert abs(float(np.mean(xT)) - (1.0 + mu)) < 4 * se
    assert float(np.var(xT)) == pytest.approx(sigma ** 2, rel=0.05)


def test_geometric_weak_error_small():
    mu, sigma = 0.05, 0.2
    b = simulate(geometric_brownian_model(mu, sigma), 0.0, 1.0, 1.0, 200,
                 50_000, seed=9)
    target = math.exp(mu)                      # E[X_1] = x0 e^{mu}
    se = sigma * target / math.sqrt(b.n_paths)
    assert abs(float(np.mean(b.paths[:, -1])) - target) < 4 * se + 2e-3


def test_bundle_is_write_protected():
    b = simulate(brownian_model(), 0.0, 0.0, 1.0, 4, 3, seed=0)
    with pytest.raises(ValueError):
        b.paths[0, 0] = 99.0
    with pytest.raises(ValueError):
        b.increments[0, 0] = 99.0
    assert b.n_paths == 3 and b.n_steps == 4
    assert b.dt == pytest.approx(0.25)


def test_bundle_csv():
    b = simulate(brownian_model(), 0.0, 0.0, 1.0, 2, 5, seed=0)
    text = b.to_csv(max_paths=2)
    lines = text.strip().splitlines()
    assert lines[0] == "path_id,step,t,x"
    assert len(lines) == 1 + 2 * 3


def test_first_exit_indices():
    times = np.linspace(0.0, 1.0, 5)
    paths = np.array([[0.0, 0.1, 0.2, 0.1, 0.0],      # never leaves
                      [0.0, 0.6, 0.2, 0.1, 0.0],      # leaves at step 1
                      [0.0, 0.1, -0.5, 0.1, 0.0]])    # hits lower at step 2
    bundle = PathBundle(times=times, paths=paths,
                        increments=np.zeros((3, 4)), seed=0)
    idx = first_exit(bundle, (-0.5, 0.5))
    assert idx.tolist() == [4, 1, 2]
    with pytest.raises(ValidationError):
        first_exit(bundle, (1.0, -1.0))


def test_non_finite_coefficients_raise():
    bad = ForwardModel(drift=lambda t, x: np.full_like(x, math.nan),
                       diffusion=lambda t, x: np.ones_like(x))
    with pytest.raises(SimulationError, match="step 0"):
        simulate(bad, 0.0, 0.0, 1.0, 4, 3, seed=0)


def test_exploding_state_raises():
    # cubic drift with a huge gain overflows within a few steps
    bad = ForwardModel(drift=lambda t, x: 1e200 * (x + 1.0) ** 3,
                       diffusion=lambda t, x: np.ones_like(x))
    with np.errstate(over="ignore"), pytest.raises(SimulationError):
        simulate(bad, 0.0, 1.0, 1.0, 8, 3, seed=0)


def test_validation_errors():
    m = brownian_model()
    with pytest.raises(ValidationError):
        simulate(m, 1.0, 0.0, 1.0, 4, 3, seed=0)      # t0 == T
    with pytest.raises(ValidationError):
        simulate(m, 0.0, 0.0, 1.0, 0, 3, seed=0)
    with pytest.raises(ValidationError):
        simulate(m, 0.0, 0.0, 1.0, 4, 3, seed=0,
                 increments=np.zeros((3, 5)))
    with pytest.raises(ValidationError):
        ForwardModel(drift=lambda t, x: x, diffusion=lambda t, x: x,
                     dimension=2)
