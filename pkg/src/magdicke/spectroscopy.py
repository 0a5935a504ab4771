"""THz time-domain spectroscopy: transfer function and optical constants.

Time is in ps, frequency in THz (cycles/ps), thicknesses in um. Spectra use
the convention

    E(w) = sum_t e(t) exp(+i w t) dt,

so that a delay by dt multiplies E(w) by exp(+i w dt) and a slab of complex
index n + i kappa propagates as exp(+i w (n + i kappa) d / c). With this sign
the phase of H = E_s / E_r is positive and grows with frequency.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import C_UM_PER_PS

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-2  # fraction of max |E_r| defining the valid band
UM_PER_CM = 1e4


@dataclass
class TimeDomainTrace:
    t: np.ndarray  # ps
    e: np.ndarray
    label: str = "reference"

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        self.e = np.asarray(self.e, dtype=float)
        if self.t.ndim != 1 or self.t.shape != self.e.shape:
            raise ValueError("t and e must be 1-D arrays of equal length")
        if self.t.size < 2:
            raise ValueError("a trace needs at least two samples")
        steps = np.diff(self.t)
        if not np.all(steps > 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
            raise ValueError("time samples must be uniformly spaced and increasing")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass
class Spectrum:
    freq: np.ndarray  # THz
    H: np.ndarray  # complex transfer function, nan outside the valid band
    valid: np.ndarray  # bool mask


@dataclass
class OpticalConstants:
    freq: np.ndarray  # THz
    n: np.ndarray
    kappa: np.ndarray
    alpha: np.ndarray  # cm^-1
    d: float  # um
    valid: np.ndarray = field(default=None)
    negative_alpha: np.ndarray = field(default=None)

    @property
    def has_negative_alpha(self) -> bool:
        return bool(np.any(self.negative_alpha))


def spectrum(trace: TimeDomainTrace, n_fft: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(freq in THz, E(w)) on the non-negative rfft grid, optionally zero padded."""
    n = trace.t.size if n_fft is None else int(n_fft)
    if n < trace.t.size:
        raise ValueError("n_fft shorter than the trace")
    freq = np.fft.rfftfreq(n, trace.dt)
    # conj(rfft) gives the exp(+i w t) kernel for real input; shift to absolute time
    E = np.conj(np.fft.rfft(trace.e, n)) * trace.dt * np.exp(2j * np.pi * freq * trace.t[0])
    return freq, E


def _check_grids(a: TimeDomainTrace, b: TimeDomainTrace) -> None:
    if a.t.shape != b.t.shape or not np.allclose(a.t, b.t, rtol=0, atol=1e-9 * abs(a.dt)):
        raise ValueError("sample and reference traces must share the same time grid")


def echo_window(t: np.ndarray, t_pulse: float, n: float, d: float, margin: float = 0.0) -> np.ndarray:
    """Rectangular window ending before the first internal echo.

    The echo trails the main transmitted pulse (at ``t_pulse``) by the round
    trip 2 n d / c.
    """
    t_end = t_pulse + 2 * n * d / C_UM_PER_PS - margin
    return (np.asarray(t) < t_end).astype(float)


def transfer_function(
    sample: TimeDomainTrace,
    reference: TimeDomainTrace,
    window: np.ndarray | None = None,
    *,
    n_fft: int | None = None,
    noise_floor: float = NOISE_FLOOR,
) -> Spectrum:
    """H(w) = E_s(w) / E_r(w) on the band where |E_r| > noise_floor * max|E_r|."""
    _check_grids(sample, reference)
    if window is not None:
        window = np.asarray(window, dtype=float)
        if window.shape != sample.t.shape:
            raise ValueError("window must match the time grid")
        sample = TimeDomainTrace(sample.t, sample.e * window, sample.label)
        reference = TimeDomainTrace(reference.t, reference.e * window, reference.label)
    freq, Es = spectrum(sample, n_fft)
    _, Er = spectrum(reference, n_fft)
    amp = np.abs(Er)
    valid = (amp > noise_floor * amp.max()) & (freq > 0)
    H = np.full(freq.shape, np.nan + 0j)
    H[valid] = Es[valid] / Er[valid]
    return Spectrum(freq, H, valid)


def _unwrapped_phase(freq: np.ndarray, H: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Unwrap arg H across the valid band and remove the 2 pi ambiguity.

    The offset is fixed by extrapolating a straight line (the group delay)
    through the lowest part of the band to zero frequency, where the phase of
    a passive slab vanishes.
    """
    phase = np.full(freq.shape, np.nan)
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return phase
    # unwrap each contiguous run separately
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    for run in runs:
        ph = np.unwrap(np.angle(H[run]))
        k = max(2, run.size // 4)
        if run.size >= 2:
            slope, icpt = np.polyfit(freq[run][:k], ph[:k], 1)
        else:
            icpt = ph[0]
        ph -= 2 * np.pi * np.round(icpt / (2 * np.pi))
        phase[run] = ph
    return phase


def extract_optical_constants(spec: Spectrum, d: float, *, complex_fresnel: bool = False, n_iter: int = 30) -> OpticalConstants:
    """n, kappa and alpha of a slab of thickness ``d`` (um) from H(w).

    n = 1 + c arg H / (w d) and alpha = -(2/d) ln[(n+1)^2/(4n) |H|], with the
    Fresnel prefactor evaluated at the real index. kappa = c alpha / (2 w).
    Bins with alpha < 0 are kept and flagged.

    The real-index prefactor is accurate while kappa << n; for strongly
    absorbing bins ``complex_fresnel`` re-evaluates the prefactor at
    n + i kappa and iterates to self-consistency.
    """
    if not d > 0:
        raise ValueError("thickness must be positive")
    freq = spec.freq
    w = 2 * np.pi * freq  # rad/ps
    valid = spec.valid.copy()
    phase = _unwrapped_phase(freq, spec.H, valid)
    n = np.full(freq.shape, np.nan)
    alpha = np.full(freq.shape, np.nan)
    kappa = np.full(freq.shape, np.nan)
    v = valid
    n[v] = 1 + C_UM_PER_PS * phase[v] / (w[v] * d)
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha_um = -(2 / d) * np.log((n[v] + 1) ** 2 / (4 * n[v]) * np.abs(spec.H[v]))
    if complex_fresnel:
        ph, mag = phase[v], np.abs(spec.H[v])
        for _ in range(n_iter):
            nt = n[v] + 1j * C_UM_PER_PS * alpha_um / (2 * w[v])
            F = 4 * nt / (nt + 1) ** 2
            n[v] = 1 + C_UM_PER_PS * (ph - np.angle(F)) / (w[v] * d)
            with np.errstate(invalid="ignore", divide="ignore"):
                alpha_um = -(2 / d) * np.log(mag / np.abs(F))
    alpha[v] = alpha_um * UM_PER_CM
    kappa[v] = C_UM_PER_PS * alpha_um / (2 * w[v])
    neg = np.zeros(freq.shape, dtype=bool)
    neg[v] = alpha[v] < 0
    if neg.any():
        log.warning("%d bins with |H| above the Fresnel limit (negative alpha)", int(neg.sum()))
    return OpticalConstants(freq, n, kappa, alpha, d, valid, neg)


def _on_grid(x, freq: np.ndarray) -> np.ndarray:
    if callable(x):
        return np.asarray(x(freq), dtype=float) * np.ones_like(freq)
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return np.full(freq.shape, float(arr))
    if arr.shape != freq.shape:
        raise ValueError(f"optical-constant array of shape {arr.shape} does not match the {freq.shape} frequency grid")
    return arr


def slab_transfer(freq: np.ndarray, n, kappa, d: float) -> np.ndarray:
    """First-pass transmission of an air/slab/air stack relative to air.

    H = 4 n~/(n~ + 1)^2 exp(i w (n~ - 1) d / c) with n~ = n + i kappa.
    """
    nt = _on_grid(n, freq) + 1j * _on_grid(kappa, freq)
    w = 2 * np.pi * freq
    return 4 * nt / (nt + 1) ** 2 * np.exp(1j * w * (nt - 1) * d / C_UM_PER_PS)


def forward_slab(n: np.ndarray | float | Callable, kappa: np.ndarray | float | Callable, d: float, reference: TimeDomainTrace) -> TimeDomainTrace:
    """Synthetic sample trace: the reference passed once through the slab.

    ``n`` and ``kappa`` are scalars, callables of frequency (THz) or arrays on
    the reference's rfft grid. No echoes are generated.
    """
    freq, Er = spectrum(reference)
    Es = Er * slab_transfer(freq, n, kappa, d)
    # undo the kernel and time-origin conventions of spectrum()
    raw = np.conj(Es * np.exp(-2j * np.pi * freq * reference.t[0]) / reference.dt)
    e = np.fft.irfft(raw, reference.t.size)
    return TimeDomainTrace(reference.t.copy(), e, "sample")


def alpha_to_kappa(alpha_cm, freq) -> np.ndarray:
    """kappa = c alpha / (2 w) with alpha in cm^-1 and frequency in THz.

    kappa is undefined at zero frequency; it is set to 0 there (the DC bin of
    a zero-mean pulse carries no weight).
    """
    f = np.asarray(freq, dtype=float)
    a = np.asarray(alpha_cm, dtype=float) / UM_PER_CM
    w = 2 * np.pi * f
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(w > 0, C_UM_PER_PS * a / (2 * np.where(w > 0, w, 1.0)), 0.0)
    return k


def gaussian_pulse(t: np.ndarray, t0: float = 5.0, width: float = 0.25, order: int = 2) -> np.ndarray:
    """Test pulse: ``order``-th derivative of a Gaussian (1 or 2), unit peak.

    The far field of a photoconductive emitter resembles ``order=2``, whose
    spectrum rises as f^2 from zero frequency.
    """
    x = (np.asarray(t) - t0) / width
    g = np.exp(-0.5 * x * x)
    if order == 1:
        e = -x * g
    elif order == 2:
        e = (x * x - 1) * g
    else:
        raise ValueError("order must be 1 or 2")
    return e / np.max(np.abs(e))


def read_trace(path, label: str = "reference") -> TimeDomainTrace:
    """Two-column CSV (t_ps, e); a non-numeric first row is taken as a header."""
    t, e = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                a, b = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: expected two numeric columns, got {row!r}") from None
            t.append(a)
            e.append(b)
    return TimeDomainTrace(np.array(t), np.array(e), label)


def write_trace(path, trace: TimeDomainTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_ps", "e"])
        for a, b in zip(trace.t, trace.e):
            w.writerow([f"{a:.9g}", f"{b:.12g}"])


def constants_csv(oc: OpticalConstants) -> str:
    lines = ["freq_THz,n,kappa,alpha_cm-1"]
    for f, n, k, a in zip(oc.freq[oc.valid], oc.n[oc.valid], oc.kappa[oc.valid], oc.alpha[oc.valid]):
        lines.append(f"{f:.9g},{n:.9g},{k:.9g},{a:.9g}")
    return "\n".join(lines) + "\n"
