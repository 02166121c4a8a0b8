import math

import numpy as np
import pytest

from acouprop.errors import InvalidInputError
from acouprop.spectral import (
    ConjugateSymmetryWarning,
    Signal,
    Spectrum,
    dft,
    dft_grid,
    idft,
    read_csv_signal,
    read_wav,
    rmse,
    write_csv_signal,
    write_wav,
)


def naive_dft(samples):
    """Quadratic-time reference transform: bin j = sum_t x_t e^{-2pi i j t / n}."""
    samples = np.asarray(samples, dtype=complex)
    n = samples.size
    out = np.zeros(n, dtype=complex)
    for j in range(n):
        for t in range(n):
            out[j] += samples[t] * np.exp(-2j * np.pi * j * t / n)
    return out


def test_constant_signal_is_delta_at_dc():
    spec = dft(Signal([1.0, 1.0, 1.0, 1.0], 4))
    assert spec.coefficients[0] == pytest.approx(4.0)
    assert np.abs(spec.coefficients[1:]).max() < 1e-12


def test_dft_matches_naive_oracle_length_16(rng):
    samples = rng.standard_normal(16)
    got = dft(Signal(samples, 16)).coefficients
    expected = naive_dft(samples)
    assert np.allclose(got, expected, rtol=1e-9, atol=1e-9 * np.abs(expected).max())


def test_round_trip_length_64(rng):
    signal = Signal(rng.standard_normal(64), 64)
    back = idft(dft(signal))
    assert np.allclose(back.samples, signal.samples, rtol=1e-9, atol=1e-12)
    assert back.sample_rate == signal.sample_rate


def test_idft_of_dc_delta_is_constant():
    spec = Spectrum([4.0, 0.0, 0.0, 0.0], dft_grid(4, 4))
    assert np.allclose(idft(spec).samples, [1.0, 1.0, 1.0, 1.0])


def test_idft_warns_on_asymmetric_spectrum():
    spec = Spectrum([0.0, 1.0, 0.0, 0.0], dft_grid(4, 4))  # lone positive bin
    with pytest.warns(ConjugateSymmetryWarning):
        idft(spec)


def test_idft_does_not_warn_on_real_signal_spectrum(rng):
    spec = dft(Signal(rng.standard_normal(32), 32))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error", ConjugateSymmetryWarning)
        idft(spec)


def test_linearity(rng):
    s1 = rng.standard_normal(48)
    s2 = rng.standard_normal(48)
    a, b = 2.5, -1.25
    lhs = dft(Signal(a * s1 + b * s2, 48)).coefficients
    rhs = a * dft(Signal(s1, 48)).coefficients + b * dft(Signal(s2, 48)).coefficients
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.abs(rhs).max())


def test_parseval(rng):
    samples = rng.standard_normal(40)
    coeff = dft(Signal(samples, 40)).coefficients
    time_energy = np.sum(samples**2)
    freq_energy = np.sum(np.abs(coeff) ** 2) / 40
    assert time_energy == pytest.approx(freq_energy, rel=1e-9)


def test_grid_is_standard_order():
    grid = dft_grid(8, 16)
    assert np.allclose(grid / (2 * np.pi), [0, 2, 4, 6, -8, -6, -4, -2])


def test_empty_signal_rejected():
    with pytest.raises(InvalidInputError):
        Signal([], 4)


def test_nonfinite_signal_rejected():
    with pytest.raises(InvalidInputError):
        Signal([1.0, np.nan], 4)


def test_bad_sample_rate_rejected():
    with pytest.raises(InvalidInputError):
        Signal([1.0], 0)


def test_spectrum_grid_length_mismatch_rejected():
    with pytest.raises(InvalidInputError):
        Spectrum([1.0, 2.0], dft_grid(3, 3))


def test_spectrum_rejects_non_dft_grid():
    with pytest.raises(InvalidInputError):
        Spectrum([1.0, 2.0, 3.0], [0.0, 1.0, 5.0])


# -- rmse --------------------------------------------------------------------


def test_rmse_identical_is_zero():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_rmse_hand_value():
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))


def test_rmse_matches_definition(rng):
    a = rng.standard_normal(37)
    b = rng.standard_normal(37)
    expected = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)) / 37)
    assert rmse(a, b) == pytest.approx(expected, rel=1e-12)


def test_rmse_length_mismatch():
    with pytest.raises(InvalidInputError):
        rmse([1.0], [1.0, 2.0])


# -- file I/O ----------------------------------------------------------------


def test_csv_signal_round_trip_is_exact(tmp_path, rng):
    signal = Signal(rng.standard_normal(50), 16000, (1.0, 2.0, 3.0))
    path = tmp_path / "sig.csv"
    write_csv_signal(path, signal)
    back = read_csv_signal(path, position=(1.0, 2.0, 3.0))
    assert back.sample_rate == 16000
    assert np.array_equal(back.samples, signal.samples)


def test_csv_signal_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.1\n0.2\n")
    with pytest.raises(InvalidInputError):
        read_csv_signal(path)


def test_wav_round_trip_within_quantization(tmp_path, rng):
    samples = 0.5 * rng.standard_normal(64)
    signal = Signal(samples, 8000)
    path = tmp_path / "sig.wav"
    write_wav(path, signal)
    back = read_wav(path)
    assert back.sample_rate == 8000
    assert np.abs(back.samples - np.clip(samples, -1, 1)).max() <= 0.5 / 32767 + 1e-12


def test_wav_rejects_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_wav(tmp_path / "absent.wav")
