import math

import numpy as np
import pytest

import relaxshock as rs


@pytest.fixture(scope="module")
def reference():
    return rs.burgers_reference()


def test_profile_closed_form(reference):
    _, _, p = reference
    x = np.asarray(p.x)
    assert p.u.shape == (1, x.size)
    assert np.max(np.abs(p.u[0] + np.tanh(x / 8.0))) <= 1e-8
    assert np.max(np.abs(p.v[0] - 0.5)) <= 1e-12
    assert p.classification.type == "lax"
    assert p.classification.i == 2


def test_hypotheses(reference):
    model, shock, _ = reference
    h = rs.check_hypotheses(model, shock)
    assert h.all_pass()
    assert 0.15 <= h.theta_est <= 0.30


def test_scattering_and_errfn(reference):
    _, _, p = reference
    t = rs.scattering_solve(p)
    assert t.c0 == [0.5, 0.5]
    assert t.pi[0] == pytest.approx(0.5, abs=1e-14)
    assert abs(t.delta) == pytest.approx(2.0)
    assert rs.errfn(0.0) == pytest.approx(0.5)
    assert rs.errfn(1.0) == pytest.approx(0.5 * (1 + math.erf(1.0)))


def test_H_identity_and_green_pieces(reference):
    _, _, p = reference
    t = rs.scattering_solve(p)
    f = np.random.default_rng(3).normal(size=(2, p.size))
    assert np.max(np.abs(rs.H_apply(p, f, 0.0) - f)) <= 1e-12
    g = rs.green_apply(p, t, f, 0.0)
    assert np.max(np.abs(g["total"] - f)) <= 1e-12
    assert np.all(g["S"] == 0.0)


def test_evans_conjugate_symmetry(reference):
    _, _, p = reference
    ctx = rs.EvansContext(p)
    a = rs.evans_value(ctx, 1.0 + 2.0j)
    b = rs.evans_value(ctx, 1.0 - 2.0j)
    assert a[0] == pytest.approx(b[0], abs=1e-8)
    assert math.remainder(a[1] + b[1], 2 * math.pi) == pytest.approx(0.0, abs=1e-8)


def test_linear_mass_conservation(reference):
    _, _, p = reference
    x = np.asarray(rs.sim_grid(p, 10.0))
    U0 = np.zeros((2, x.size))
    U0[0] = np.exp(-((x + 5.0) ** 2))
    run = rs.evolve_linear(p, U0, 10.0, [5.0, 10.0])
    assert run["scheme"] == "exact-transport"
    assert run["mass_drift"] <= 1e-8
    assert len(run["snapshots"]) == len(run["times"])


def test_config_errors_and_checks():
    with pytest.raises(rs.ConfigError, match="model.a"):
        rs.parse_config('{"model": {"kind": "jin-xin", "n": 1, "h_poly": [0], "u_minus": [1], "u_plus": [-1]}}')
    with pytest.raises(rs.RelaxError):
        rs.make_shock(rs.make_jin_xin(1, 2.0, [0, 0, 0.5]), [1.0], [1.0])
    lines = rs.run_checks([1, 2, 8])
    assert [l["status"] for l in lines] == ["PASS", "PASS", "PASS"]
    assert lines[0]["metrics"]["sup_error"] <= 1e-8
