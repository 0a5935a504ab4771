import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magdicke.constants import MEV_TO_THZ
from magdicke.dicke_map import magnon_dispersion
from magdicke.resonance import (
    LABELS,
    classify_modes,
    field_sweep,
    linearization_matrix,
    resonance_frequencies,
    resonances,
    sweep_csv,
)
from magdicke.spin_model import Environment, default_seeds, self_consistent_solve


def test_decoupled_fe_modes_match_spin_wave_theory(decoupled):
    _, rs = resonances(decoupled, Environment(0.0, 0.0))
    assert rs.frequency_of("qFM") == pytest.approx(magnon_dispersion(decoupled, 0.0), rel=1e-7)
    # the closed-form k = pi branch drops a small Fe DM contribution
    assert rs.frequency_of("qAFM") == pytest.approx(magnon_dispersion(decoupled, math.pi), rel=1e-3)
    no_dm = decoupled.replace(D_Fe_y=0.0)
    _, rs = resonances(no_dm, Environment(0.0, 0.0))
    assert rs.frequencies[-2:] == pytest.approx(
        sorted([magnon_dispersion(no_dm, 0.0), magnon_dispersion(no_dm, math.pi)]), rel=1e-10
    )


def test_free_er_spin_precesses_at_larmor_frequency(params):
    # Er with every interaction off: a paramagnet in the applied field
    p = params.replace(J=0.0, D_x=0.0, D_y=0.0, J_Er=0.0, A_Er_x=0.0, A_Er_z=0.0)
    B = 2.0
    _, rs = resonances(p, Environment(1.0, B))
    larmor = p.mu_B * p.g_Er_x * B * MEV_TO_THZ
    er = rs.frequencies[rs.er_weight > 0.5]
    assert er == pytest.approx([larmor, larmor], rel=1e-9)
    # degenerate sublattices: no preferred parity, so no in/out-of-phase label
    assert [lab for lab, w in zip(rs.labels, rs.er_weight) if w > 0.5] == ["mixed", "mixed"]


@settings(max_examples=40, deadline=None)
@given(T=st.floats(0.5, 12), B=st.floats(0, 7))
def test_spectrum_is_purely_imaginary(params, T, B):
    env = Environment(T, B)
    state = self_consistent_solve(params, env, default_seeds(params)[:3])
    M = linearization_matrix(state, params, env)
    rs = resonance_frequencies(M, state, env)
    assert rs.max_real_ratio < 1e-9
    lam = np.linalg.eigvals(M)
    # +-i omega pairs plus four longitudinal zeros
    assert np.sort(np.abs(lam))[:4] == pytest.approx(np.zeros(4), abs=1e-9 * np.abs(lam).max())
    assert np.all(rs.frequencies >= 0)
    assert np.all(np.diff(rs.frequencies) >= 0)


def test_projection_and_unprojected_agree(params):
    env = Environment(2.0, 1.0)
    state = self_consistent_solve(params, env)
    M = linearization_matrix(state, params, env)
    a = resonance_frequencies(M, state, env).frequencies
    b = resonance_frequencies(M).frequencies
    assert a == pytest.approx(b, rel=1e-8)


def test_eigenvectors_unit_norm(params):
    _, rs = resonances(params, Environment(2.0, 0.0))
    assert np.linalg.norm(rs.eigenvectors, axis=1) == pytest.approx(np.ones(4))


def test_labels_at_two_kelvin(params):
    _, rs = resonances(params, Environment(2.0, 0.0))
    assert rs.labels == ["Er_out_of_phase", "Er_in_phase", "qFM", "qAFM"]
    assert set(rs.labels) <= set(LABELS)
    assert np.all((rs.fe_weight >= 0) & (rs.fe_weight <= 1))
    assert rs.er_weight == pytest.approx(1 - rs.fe_weight)


def test_labels_stable_in_strong_field(params):
    _, rs = resonances(params, Environment(10.0, 7.0))
    assert sorted(rs.labels) == sorted(["Er_out_of_phase", "Er_in_phase", "qFM", "qAFM"])


def test_classify_is_idempotent(params):
    state, rs = resonances(params, Environment(2.0, 0.5))
    again = classify_modes(rs, state, params)
    assert again.labels == rs.labels


def test_sweep_rejects_non_monotone_grid(params):
    with pytest.raises(ValueError):
        field_sweep(params, 2.0, [0.0, 1.0, 0.5])


def test_sweep_csv_columns(params):
    pts = field_sweep(params, 2.0, [0.0, 1.0])
    text = sweep_csv(pts)
    lines = text.splitlines()
    assert lines[0] == "B_T,mode_label,freq_THz,fe_weight,er_weight"
    assert len(lines) == 1 + 2 * 4


def test_descending_sweep_matches_ascending(params):
    B = np.linspace(0, 3, 7)
    up = field_sweep(params, 2.0, B)
    down = field_sweep(params, 2.0, B[::-1])[::-1]
    for a, b in zip(up, down):
        assert a.modes.frequencies == pytest.approx(b.modes.frequencies, rel=1e-8)
