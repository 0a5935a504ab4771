import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magdicke.constants import C_UM_PER_PS
from magdicke.spectroscopy import (
    Spectrum,
    TimeDomainTrace,
    alpha_to_kappa,
    constants_csv,
    echo_window,
    extract_optical_constants,
    forward_slab,
    gaussian_pulse,
    read_trace,
    spectrum,
    transfer_function,
    write_trace,
)

T_GRID = np.arange(0.0, 100.0, 0.02)
D_UM = 1162.0


@pytest.fixture(scope="module")
def ref():
    return TimeDomainTrace(T_GRID, gaussian_pulse(T_GRID, 5.0, 0.15))


def test_trace_validation():
    with pytest.raises(ValueError):
        TimeDomainTrace([0.0], [1.0])
    with pytest.raises(ValueError):
        TimeDomainTrace([0.0, 1.0, 3.0], [0, 0, 0])


def test_spectrum_matches_direct_sum(ref):
    freq, E = spectrum(ref)
    for k in (3, 50, 120):
        direct = np.sum(ref.e * np.exp(2j * np.pi * freq[k] * ref.t)) * ref.dt
        assert E[k] == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_identical_traces_give_unit_transfer(ref):
    sp = transfer_function(ref, ref)
    assert sp.H[sp.valid] == pytest.approx(np.ones(sp.valid.sum()), abs=1e-15)


def test_delay_gives_linear_positive_phase(ref):
    dt = 1.0
    delayed = TimeDomainTrace(T_GRID, gaussian_pulse(T_GRID, 6.0, 0.15))
    sp = transfer_function(delayed, ref)
    f = sp.freq[sp.valid]
    assert np.abs(sp.H[sp.valid]) == pytest.approx(np.ones(f.size), abs=1e-10)
    assert np.angle(sp.H[sp.valid] * np.exp(-2j * np.pi * f * dt)) == pytest.approx(np.zeros(f.size), abs=1e-10)


def test_valid_band_definition(ref):
    sp = transfer_function(ref, ref)
    _, E = spectrum(ref)
    amp = np.abs(E)
    assert np.array_equal(sp.valid, (amp > 1e-2 * amp.max()) & (sp.freq > 0))
    assert np.all(np.isnan(sp.H[~sp.valid]))


def test_grid_mismatch_rejected(ref):
    other = TimeDomainTrace(T_GRID + 0.01, ref.e)
    with pytest.raises(ValueError):
        transfer_function(other, ref)


def test_unit_transfer_gives_vacuum(ref):
    oc = extract_optical_constants(transfer_function(ref, ref), D_UM)
    v = oc.valid
    assert oc.n[v] == pytest.approx(np.ones(v.sum()), abs=1e-12)
    assert oc.alpha[v] == pytest.approx(np.zeros(v.sum()), abs=1e-9)


def test_forward_identity(ref):
    out = forward_slab(1.0, 0.0, D_UM, ref)
    assert out.e == pytest.approx(ref.e, abs=1e-12)


def test_forward_lossless_delay_and_amplitude(ref):
    d = 100.0
    out = forward_slab(2.0, 0.0, d, ref)
    delay = d / C_UM_PER_PS
    freq, Er = spectrum(ref)
    _, Es = spectrum(out)
    v = np.abs(Er) > 1e-2 * np.abs(Er).max()
    ratio = Es[v] / Er[v]
    assert np.abs(ratio) == pytest.approx(np.full(v.sum(), 8 / 9), rel=1e-10)
    assert np.angle(ratio * np.exp(-2j * np.pi * freq[v] * delay)) == pytest.approx(np.zeros(v.sum()), abs=1e-9)


def test_round_trip_constant_constants():
    # far-field pulse (spectrum ~ f^2 at low frequency) as from a photoconductive emitter
    ref = TimeDomainTrace(T_GRID, gaussian_pulse(T_GRID, 5.0, 0.15, order=2))
    kappa = lambda f: alpha_to_kappa(20.0, f)
    oc = extract_optical_constants(transfer_function(forward_slab(5.5, kappa, D_UM, ref), ref), D_UM)
    v = oc.valid
    assert np.max(np.abs(oc.n[v] / 5.5 - 1)) < 0.01
    assert np.max(np.abs(oc.alpha[v] / 20.0 - 1)) < 0.01
    assert not oc.has_negative_alpha


def test_alpha_kappa_consistency(ref):
    oc = extract_optical_constants(transfer_function(forward_slab(3.0, 0.01, 500.0, ref), ref), 500.0)
    v = oc.valid
    w = 2 * np.pi * oc.freq[v]
    assert oc.alpha[v] / 1e4 == pytest.approx(2 * w * oc.kappa[v] / C_UM_PER_PS, rel=1e-12)


def test_complex_fresnel_removes_low_frequency_bias(ref):
    kappa = lambda f: alpha_to_kappa(20.0, f)
    sp = transfer_function(forward_slab(5.5, kappa, D_UM, ref), ref)
    plain = extract_optical_constants(sp, D_UM)
    exact = extract_optical_constants(sp, D_UM, complex_fresnel=True)
    v = plain.valid
    assert np.max(np.abs(plain.alpha[v] / 20 - 1)) > 1e-3  # the real-index prefactor is biased where kappa ~ n
    assert np.max(np.abs(exact.alpha[v] / 20 - 1)) < 1e-8
    assert np.max(np.abs(exact.n[v] / 5.5 - 1)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(n0=st.floats(1.5, 6), slope=st.floats(-0.2, 0.2), a0=st.floats(0, 30))
def test_round_trip_smooth_dispersion(n0, slope, a0):
    ref = TimeDomainTrace(T_GRID, gaussian_pulse(T_GRID, 5.0, 0.15, order=2))
    n = lambda f: n0 + slope * f
    alpha = lambda f: a0 * (1 + 0.5 * f)
    sample = forward_slab(n, lambda f: alpha_to_kappa(alpha(f), f), 300.0, ref)
    oc = extract_optical_constants(transfer_function(sample, ref), 300.0, complex_fresnel=True)
    v = oc.valid
    assert oc.n[v] == pytest.approx(n(oc.freq[v]), rel=1e-6)
    assert oc.alpha[v] == pytest.approx(alpha(oc.freq[v]), rel=1e-5, abs=1e-6)


def test_absorption_line_position():
    ref = TimeDomainTrace(T_GRID, gaussian_pulse(T_GRID, 5.0, 0.15, order=2))
    f0, g = 0.8, 0.02
    alpha = lambda f: 20 + 200 * g**2 / ((f - f0) ** 2 + g**2)
    sample = forward_slab(5.5, lambda f: alpha_to_kappa(alpha(f), f), D_UM, ref)
    oc = extract_optical_constants(transfer_function(sample, ref), D_UM)
    v = oc.valid
    f_peak = oc.freq[v][np.argmax(oc.alpha[v])]
    assert abs(f_peak - f0) <= oc.freq[1] - oc.freq[0]


def test_halving_frequency_step_keeps_index(ref):
    sample = forward_slab(4.0, lambda f: alpha_to_kappa(10.0, f), 500.0, ref)
    a = extract_optical_constants(transfer_function(sample, ref), 500.0)
    b = extract_optical_constants(transfer_function(sample, ref, n_fft=2 * T_GRID.size), 500.0)
    common = a.valid & b.valid[::2]
    assert np.max(np.abs(b.n[::2][common] - a.n[common])) < 1e-4


def test_negative_alpha_flagged(ref):
    gain = forward_slab(3.0, -0.02, 500.0, ref)
    oc = extract_optical_constants(transfer_function(gain, ref), 500.0)
    assert oc.has_negative_alpha
    assert np.all(oc.alpha[oc.negative_alpha] < 0)


def test_echo_window_cuts_before_round_trip():
    t = np.linspace(0, 100, 5001)
    w = echo_window(t, 20.0, 5.5, D_UM)
    t_end = 20.0 + 2 * 5.5 * D_UM / C_UM_PER_PS
    assert w[t < t_end].min() == 1 and w[t >= t_end].max() == 0


def test_echo_window_removes_echo(ref):
    n, d = 3.0, 300.0
    main = forward_slab(n, 0.0, d, ref)
    # the first internal echo: main pulse delayed by 2 n d / c and scaled by r^2
    r = (n - 1) / (n + 1)
    n_shift = 1 + 2 * n  # a lossless "slab" of this index delays by exactly 2 n d / c
    shifted = forward_slab(n_shift, 0.0, d, main)
    fresnel = 4 * n_shift / (n_shift + 1) ** 2
    with_echo = TimeDomainTrace(T_GRID, main.e + r * r * shifted.e / fresnel)
    t_main = T_GRID[np.argmax(np.abs(main.e))]
    win = echo_window(T_GRID, t_main, n, d, margin=1.0)
    clean = extract_optical_constants(transfer_function(with_echo, ref, win), d)
    dirty = extract_optical_constants(transfer_function(with_echo, ref), d)
    v = clean.valid
    assert clean.n[v] == pytest.approx(np.full(v.sum(), n), rel=1e-6)
    assert np.max(np.abs(dirty.n[v] - n)) > 1e-2


def test_csv_round_trip(tmp_path, ref):
    path = tmp_path / "r.csv"
    write_trace(path, ref)
    back = read_trace(path)
    assert back.e == pytest.approx(ref.e, rel=1e-11, abs=1e-12)
    oc = extract_optical_constants(transfer_function(back, back), D_UM)
    assert constants_csv(oc).splitlines()[0] == "freq_THz,n,kappa,alpha_cm-1"


def test_bad_trace_file(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_ps,e\n0,1\n0.1,x\n")
    with pytest.raises(ValueError, match=":3:"):
        read_trace(path)
