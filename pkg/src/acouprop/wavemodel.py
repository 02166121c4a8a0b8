"""Propagation coefficient container and frequency-domain wave physics.

A single complex coefficient per frequency bin, gamma(w) = alpha(w) + i*kappa(w),
governs how a spectrum changes over a travel distance d: each bin is scaled
by exp(-gamma*d). alpha (nepers/m) attenuates the magnitude and is physically
an even, non-negative function of w; kappa (rad/m) shifts the phase and is
odd in w.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, InvalidInputError, OverflowRangeError
from .spectral import Spectrum

__all__ = [
    "PropagationCoefficient",
    "SymmetryReport",
    "propagate",
    "propagate_inverse",
    "wave_equation_residual",
    "symmetry_report",
    "wave_speed",
]

# Largest alpha*d admissible in exp(+alpha*d) before leaving double range.
_MAX_EXP_ARG = math.log(np.finfo(float).max)  # ~709.78
DIV_EPS = 1e-12


@dataclass(frozen=True)
class PropagationCoefficient:
    """Per-frequency attenuation (alpha) and wave number (kappa) vectors.

    ``require_nonnegative_alpha=True`` enforces alpha >= 0 elementwise at
    construction; estimators that may legitimately produce small negative
    attenuation values construct with the flag off.
    """

    alpha: np.ndarray
    kappa: np.ndarray
    angular_frequencies: np.ndarray
    require_nonnegative_alpha: bool = False

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        kappa = np.asarray(self.kappa, dtype=float)
        grid = np.asarray(self.angular_frequencies, dtype=float)
        if not (alpha.ndim == kappa.ndim == grid.ndim == 1):
            raise InvalidInputError("alpha, kappa and grid must be 1-D")
        if not (alpha.shape == kappa.shape == grid.shape) or alpha.size == 0:
            raise InvalidInputError(
                f"length mismatch: alpha {alpha.shape}, kappa {kappa.shape}, "
                f"grid {grid.shape}"
            )
        if not (np.isfinite(alpha).all() and np.isfinite(kappa).all() and np.isfinite(grid).all()):
            raise InvalidInputError("alpha, kappa and grid must be finite")
        if self.require_nonnegative_alpha and (alpha < 0).any():
            j = int(np.argmin(alpha))
            raise InvalidInputError(
                f"alpha must be non-negative; bin {j} has alpha={alpha[j]:.6g}"
            )
        for arr in (alpha, kappa, grid):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "angular_frequencies", grid)

    def __len__(self) -> int:
        return self.alpha.size

    @property
    def gamma(self) -> np.ndarray:
        """Complex coefficient alpha + i*kappa per bin."""
        return self.alpha + 1j * self.kappa

    # -- serialization ------------------------------------------------------

    def to_csv(self, path) -> None:
        """Write columns (omega, alpha, kappa), 17 significant digits."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["omega", "alpha", "kappa"])
            for w, a, k in zip(self.angular_frequencies, self.alpha, self.kappa):
                writer.writerow([f"{w:.17g}", f"{a:.17g}", f"{k:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "PropagationCoefficient":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["omega", "alpha", "kappa"]:
            raise InvalidInputError(f"{path}: expected header omega,alpha,kappa")
        data = np.asarray([[float(v) for v in row] for row in rows[1:] if row])
        if data.size == 0:
            raise InvalidInputError(f"{path}: no coefficient rows")
        return cls(data[:, 1], data[:, 2], data[:, 0])

    def to_json_dict(self) -> dict:
        return {
            "omega": [float(f"{w:.17g}") for w in self.angular_frequencies],
            "alpha": [float(f"{a:.17g}") for a in self.alpha],
            "kappa": [float(f"{k:.17g}") for k in self.kappa],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PropagationCoefficient":
        try:
            return cls(doc["alpha"], doc["kappa"], doc["omega"])
        except KeyError as exc:
            raise InvalidInputError(f"missing coefficient field {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "PropagationCoefficient":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class SymmetryReport:
    """Worst-case deviations from alpha-evenness and kappa-oddness."""

    alpha_evenness_error: float
    kappa_oddness_error: float

    def __post_init__(self):
        if self.alpha_evenness_error < 0 or self.kappa_oddness_error < 0:
            raise InvalidInputError("symmetry errors must be non-negative")


def _check_grids(spectrum: Spectrum, gamma: PropagationCoefficient) -> None:
    if not np.array_equal(spectrum.angular_frequencies, gamma.angular_frequencies):
        raise GridMismatchError(
            "spectrum and coefficient frequency grids differ "
            f"(lengths {len(spectrum)} vs {len(gamma)})"
        )


def propagate(
    input: Spectrum, gamma: PropagationCoefficient, delta_x: float
) -> Spectrum:
    """Propagate a spectrum over distance delta_x: bin j scales by exp(-gamma_j*d).

    The output position is the input position shifted by delta_x along x
    (bookkeeping only; the physics is direction-agnostic).
    """
    _check_grids(input, gamma)
    factor = np.exp(-(gamma.alpha + 1j * gamma.kappa) * delta_x)
    position = np.asarray(input.position, dtype=float).copy()
    position[0] += delta_x
    return Spectrum(input.coefficients * factor, input.angular_frequencies, position)


def propagate_inverse(
    output: Spectrum, gamma: PropagationCoefficient, delta_x: float
) -> Spectrum:
    """Exact algebraic inverse of :func:`propagate` over the same distance.

    Raises OverflowRangeError when exp(alpha*d) would leave double range
    for some bin.
    """
    _check_grids(output, gamma)
    growth = gamma.alpha * delta_x
    too_big = growth > _MAX_EXP_ARG
    if too_big.any():
        j = int(np.argmax(growth))
        raise OverflowRangeError(
            f"exp(alpha*d) overflows at bin {j}: alpha={gamma.alpha[j]:.6g}, "
            f"d={delta_x:.6g}"
        )
    factor = np.exp((gamma.alpha + 1j * gamma.kappa) * delta_x)
    if not np.isfinite(factor.view(float)).all():
        j = int(np.argmax(~np.isfinite(np.abs(factor))))
        raise OverflowRangeError(f"inverse propagation factor overflows at bin {j}")
    position = np.asarray(output.position, dtype=float).copy()
    position[0] -= delta_x
    return Spectrum(output.coefficients * factor, output.angular_frequencies, position)


def wave_equation_residual(
    spectrum: Spectrum, gamma: PropagationCoefficient, delta_x: float
) -> np.ndarray:
    """Left-hand side of the one-directional spectral wave equation, per bin.

    Returns (alpha_j^2 + 2i*alpha_j*kappa_j) * spectrum_j * exp(-gamma_j*d).
    Identically zero only where alpha vanishes (or the spectrum does); the
    caller decides what tolerance, if any, to apply.
    """
    _check_grids(spectrum, gamma)
    front = gamma.alpha**2 + 2j * gamma.alpha * gamma.kappa
    return front * spectrum.coefficients * np.exp(-(gamma.alpha + 1j * gamma.kappa) * delta_x)


def _symmetric_pairs(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices (j, n-j) pairing each positive bin with its negative twin.

    Returns (plus_idx, minus_idx, self_paired_mask). DC is always
    self-paired; for even n the Nyquist bin is too.
    """
    n = grid.size
    idx = np.arange(n)
    partner = (-idx) % n
    if not np.allclose(grid[partner], -grid, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(grid).max())):
        raise InvalidInputError("grid is not symmetric (omega_{n-j} != -omega_j)")
    self_paired = partner == idx
    take = idx < partner  # each pair once
    return idx[take], partner[take], self_paired


def symmetry_report(gamma: PropagationCoefficient) -> SymmetryReport:
    """Measure alpha-evenness and kappa-oddness over the symmetric grid.

    Evenness error is max_j |alpha(w_j) - alpha(-w_j)|; oddness error is
    max_j |kappa(w_j) + kappa(-w_j)| with the self-paired DC and Nyquist
    bins excluded from the oddness pairing.
    """
    plus, minus, _ = _symmetric_pairs(gamma.angular_frequencies)
    if plus.size == 0:
        return SymmetryReport(0.0, 0.0)
    even_err = float(np.abs(gamma.alpha[plus] - gamma.alpha[minus]).max())
    odd_err = float(np.abs(gamma.kappa[plus] + gamma.kappa[minus]).max())
    return SymmetryReport(even_err, odd_err)


def wave_speed(gamma: PropagationCoefficient, div_eps: float = DIV_EPS) -> np.ndarray:
    """Per-bin wave speed |w_j|/|kappa_j| in m/s.

    Bins with |kappa_j| <= div_eps carry NaN (no phase information, e.g.
    the DC bin of any odd kappa).
    """
    speed = np.full(len(gamma), np.nan)
    ok = np.abs(gamma.kappa) > div_eps
    speed[ok] = np.abs(gamma.angular_frequencies[ok]) / np.abs(gamma.kappa[ok])
    return speed
