import numpy as np
import pytest

from magdicke.errors import NoBracket
from magdicke.phase_diagram import boundary_scan, critical_field, critical_temperature, max_workers
from magdicke.spin_model import Environment, order_parameters, self_consistent_solve


def test_critical_field_brackets_order_parameter(params):
    Hc = critical_field(params, 2.0, tol=1e-4)
    below = self_consistent_solve(params, Environment(2.0, Hc - 0.01))
    above = self_consistent_solve(params, Environment(2.0, Hc + 0.01))
    assert abs(order_parameters(below)[1]) > 1e-3
    assert abs(order_parameters(above)[1]) < 1e-4


def test_er_and_fe_boundaries_coincide(params):
    for T in (1.0, 3.0):
        assert critical_field(params, T, which="Fe") == pytest.approx(critical_field(params, T), abs=0.05)


def test_critical_field_monotone_in_temperature(params):
    H = [critical_field(params, T) for T in (0.0, 1.0, 2.0, 3.0)]
    assert all(a >= b - 1e-3 for a, b in zip(H, H[1:]))


def test_no_bracket_above_tc(params):
    with pytest.raises(NoBracket):
        critical_field(params, 5.0)


def test_critical_temperature_consistent_with_field_search(params):
    Tc = critical_temperature(params, 0.0, tol=1e-5)
    lo = self_consistent_solve(params, Environment(Tc - 0.01, 0.0))
    hi = self_consistent_solve(params, Environment(Tc + 0.01, 0.0))
    assert abs(order_parameters(lo)[1]) > 1e-3
    assert abs(order_parameters(hi)[1]) < 1e-4


def test_scan_agrees_with_refined_boundary(params):
    T = [1.0, 2.0, 5.0]
    H = np.linspace(0, 3, 13)
    scan = boundary_scan(params, T, H)
    assert scan.er_op.shape == (3, 13)
    assert not scan.failures
    pts = dict(scan.boundary.points)
    assert set(pts) == {1.0, 2.0}
    assert pts[2.0] == pytest.approx(critical_field(params, 2.0), abs=2e-3)
    assert not scan.superradiant[2].any()
    assert scan.superradiant[0, 0] and not scan.superradiant[0, -1]


def test_scan_independent_of_worker_count(params):
    T = [1.5, 2.5]
    H = np.linspace(0, 3, 5)
    a = boundary_scan(params, T, H, refine=False, workers=1)
    b = boundary_scan(params, T, H, refine=False, workers=2)
    assert np.array_equal(a.er_op, b.er_op)
    assert a.boundary.points == b.boundary.points


def test_scan_rejects_unsorted_grid(params):
    with pytest.raises(ValueError):
        boundary_scan(params, [2.0, 1.0], [0.0, 1.0])


def test_worker_env(monkeypatch):
    monkeypatch.setenv("MAGDICKE_WORKERS", "3")
    assert max_workers() == 3
    monkeypatch.setenv("MAGDICKE_WORKERS", "junk")
    assert max_workers() == 1
