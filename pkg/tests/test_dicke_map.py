import math

import numpy as np
import pytest

from magdicke.constants import HBAR
from magdicke.dicke_map import (
    bare_er_frequency,
    canting_angle,
    dicke_parameters,
    dilution,
    exchange_energies,
    magnon_dispersion,
    mapped_ratio,
    normalized_coupling,
    spin_wave_coefficients,
)
from magdicke.errors import NegativeDiscriminant
from magdicke.spin_model import Environment


def test_canting_angle_closed_form(params):
    p = params
    expected = -0.5 * math.atan(p.z_Fe * p.D_Fe_y / (p.z_Fe * p.J_Fe - p.A_Fe_x + p.A_Fe_z))
    assert canting_angle(p) == expected
    assert canting_angle(p.replace(D_Fe_y=0.0)) == 0.0
    assert 0 < canting_angle(p) < 0.05


def test_no_dm_coefficients(params):
    p = params.replace(D_Fe_y=0.0)
    a, b, c, d = spin_wave_coefficients(p)
    pre = p.S_Fe / (p.g_Fe_x * p.mu_B)
    zJ = p.z_Fe * p.J_Fe
    assert a == pytest.approx(pre * (-2 * p.A_Fe_z - zJ))
    assert b == pytest.approx(pre * zJ)
    assert c == pytest.approx(pre * (zJ + 2 * p.A_Fe_z - 2 * p.A_Fe_x))
    assert d == pytest.approx(-pre * zJ)


def test_dispersion_formula(params):
    a, b, c, d = spin_wave_coefficients(params)
    for k in (0.0, 1.0, math.pi):
        w = params.g_Fe_x * params.mu_B * math.sqrt((b * math.cos(k) - a) * (d * math.cos(k) + c)) / HBAR
        assert magnon_dispersion(params, k) == pytest.approx(w / (2 * math.pi))


def test_magnon_frequencies_reference_values(params):
    assert magnon_dispersion(params, 0.0) == pytest.approx(0.4736, abs=1e-3)
    assert magnon_dispersion(params, math.pi) == pytest.approx(0.6484, abs=1e-3)


def test_unstable_reference_raises(params):
    with pytest.raises(NegativeDiscriminant):
        magnon_dispersion(params.replace(A_Fe_z=0.0), 0.0)


def test_exchange_energies(params):
    p = params
    beta = canting_angle(p)
    E_x, E_y = exchange_energies(p)
    assert E_x == pytest.approx(4 * p.S_Fe * (p.J * math.sin(beta) + p.D_y * math.cos(beta)))
    assert E_y == pytest.approx(-4 * p.S_Fe * p.D_x * math.cos(beta))


def test_dilution_limits(params):
    assert dilution(params, Environment(0.0, 0.0)) == 1.0
    x2, x10 = dilution(params, Environment(2.0, 0.0)), dilution(params, Environment(10.0, 0.0))
    assert 0 < x10 < x2 < 1
    E_x, _ = exchange_energies(params)
    assert x2 == pytest.approx(math.tanh(abs(E_x) / (2 * params.k_B * 2.0)))


def test_couplings_scale_with_sqrt_dilution(params):
    a = dicke_parameters(params, Environment(2.0, 0.0))
    b = dicke_parameters(params, Environment(5.0, 0.0))
    r = math.sqrt(b.dilution_x / a.dilution_x)
    for name in ("g_x", "g_y", "g_yp", "g_z", "g_zp"):
        assert getattr(b, name) == pytest.approx(r * getattr(a, name), rel=1e-12)


def test_coupling_formulas(params):
    dp = dicke_parameters(params, Environment(2.0, 0.0))
    a, b, c, d = dp.abcd
    x, S, beta = dp.dilution_x, params.S_Fe, dp.beta0
    assert dp.g_z == pytest.approx(math.sqrt(x * S) * params.D_x * ((d - c) / (b + a)) ** 0.25)
    assert dp.g_y == pytest.approx(math.sqrt(x * S) * params.J * ((d + c) / (b - a)) ** 0.25)
    assert dp.g_x == pytest.approx(
        math.sqrt(x * S) * (params.J * math.cos(beta) - params.D_y * math.sin(beta)) * ((b + a) / (d - c)) ** 0.25
    )


def test_normalized_coupling(params):
    dp = dicke_parameters(params, Environment(2.0, 0.0))
    assert normalized_coupling(dp) == pytest.approx(dp.g_z / (HBAR * 2 * math.pi * dp.omega_qAFM))
    assert 0 < normalized_coupling(dp) < 0.5


def test_as_dict_flat(params):
    d = dicke_parameters(params, Environment(2.0, 0.0)).as_dict()
    assert {"omega_qFM", "omega_qAFM", "E_x", "E_y", "g_x", "g_y", "g_yp", "g_z", "g_zp", "a", "b", "c", "d"} <= set(d)


def test_bare_er_frequency_is_er_only(params):
    # with the Er-Fe exchange switched off the whole spectrum's Er modes coincide with the bare ones
    from magdicke.resonance import resonances

    p = params.replace(J=0.0, D_x=0.0, D_y=0.0)
    env = Environment(2.0, 1.0)
    _, rs = resonances(p, env)
    er = [f for f, lab in zip(rs.frequencies, rs.labels) if lab.startswith("Er")]
    assert min(abs(bare_er_frequency(p, env) - f) for f in er) < 1e-9


def test_mapped_ratio_positive(params):
    nu = mapped_ratio(params, Environment(2.0, 1.885))
    assert 0 < nu < 1
