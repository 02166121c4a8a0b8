"""Distance estimation from spectrum pairs and multilateration from anchors.

Each usable frequency bin yields one travel-distance candidate by
inverting the per-bin decay e^{-gamma*d}; the candidates form a
distribution summarized by mean/mode/std. Position recovery minimizes
the sum of squared range residuals to known anchors with Gauss-Newton
from a linearized closed-form start.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bayes import PosteriorTrace, histogram_mode
from .errors import DegenerateInputError, InvalidInputError, NoFixError
from .spectral import Spectrum
from .wavemodel import PropagationCoefficient

__all__ = [
    "DistanceEstimate",
    "Anchor",
    "PositionFix",
    "estimate_distance",
    "propagate_uncertainty",
    "trilaterate",
]

MAG_EPS = 1e-12
DIV_EPS = 1e-12


@dataclass(frozen=True)
class DistanceEstimate:
    """Per-bin travel-distance candidates with their summary statistics."""

    per_bin: np.ndarray
    mean: float
    mode: float
    std: float
    mode_flag: str = "magnitude_only"

    def __post_init__(self):
        per_bin = np.asarray(self.per_bin, dtype=float)
        if per_bin.size == 0:
            raise InvalidInputError("estimate needs at least one usable bin")
        per_bin.setflags(write=False)
        object.__setattr__(self, "per_bin", per_bin)
        if self.std < 0:
            raise InvalidInputError("std must be >= 0")

    @property
    def n_bins_used(self) -> int:
        return self.per_bin.size

    def to_dict(self) -> dict:
        return {
            "mean": float(self.mean),
            "mode": float(self.mode),
            "std": float(self.std),
            "n_bins_used": self.n_bins_used,
            "mode_flag": self.mode_flag,
        }


@dataclass(frozen=True)
class Anchor:
    """Known transmitter position paired with an estimated distance to it."""

    position: np.ndarray
    distance: DistanceEstimate

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos.ndim != 1 or pos.size not in (2, 3):
            raise InvalidInputError("anchor position must be a 2- or 3-vector")
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class PositionFix:
    """Estimated position, final range residual and a per-axis uncertainty
    proxy propagated from the anchor distance stds."""

    position: np.ndarray
    residual: float
    covariance_proxy: np.ndarray

    def __post_init__(self):
        if self.residual < 0:
            raise InvalidInputError("residual must be >= 0")
        pos = np.asarray(self.position, dtype=float)
        cov = np.asarray(self.covariance_proxy, dtype=float)
        pos.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "covariance_proxy", cov)

    def to_dict(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "residual": float(self.residual),
            "per_axis_std": [float(v) for v in self.covariance_proxy],
        }


def _summarize(per_bin: np.ndarray, mode_flag: str) -> DistanceEstimate:
    return DistanceEstimate(
        per_bin,
        mean=float(per_bin.mean()),
        mode=histogram_mode(per_bin),
        std=float(per_bin.std(ddof=0)),
        mode_flag=mode_flag,
    )


def estimate_distance(
    pair: tuple[Spectrum, Spectrum],
    gamma: PropagationCoefficient,
    mode: str = "magnitude_only",
    mag_eps: float = MAG_EPS,
    div_eps: float = DIV_EPS,
) -> DistanceEstimate:
    """Travel distance between a spectrum pair given the medium coefficient.

    ``magnitude_only`` inverts the attenuation channel only,
    d_j = -ln(|P2_j|/|P1_j|)/alpha_j, which is free of phase wrapping;
    bins with (near-)zero attenuation carry no distance information and
    are masked. ``complex_real_part`` mirrors the full complex inversion
    d_j = Re(-Log(P2_j/P1_j)/gamma_j), valid modulo phase wrapping.
    """
    speaker, receiver = pair
    if not np.array_equal(speaker.angular_frequencies, receiver.angular_frequencies):
        raise InvalidInputError("pair spectra must share one frequency grid")
    if not np.array_equal(speaker.angular_frequencies, gamma.angular_frequencies):
        raise InvalidInputError("gamma grid does not match the pair grid")
    if mode not in ("magnitude_only", "complex_real_part"):
        raise InvalidInputError(f"unknown distance mode {mode!r}")

    mag1 = np.abs(speaker.coefficients)
    mag2 = np.abs(receiver.coefficients)
    usable = (mag1 >= mag_eps) & (mag2 >= mag_eps)
    if mode == "magnitude_only":
        usable &= np.abs(gamma.alpha) > div_eps
        if not usable.any():
            raise DegenerateInputError("no usable bins (zero attenuation everywhere?)")
        per_bin = -np.log(mag2[usable] / mag1[usable]) / gamma.alpha[usable]
    else:
        usable &= np.abs(gamma.gamma) > div_eps
        if not usable.any():
            raise DegenerateInputError("no usable bins (zero coefficient everywhere?)")
        ratio = receiver.coefficients[usable] / speaker.coefficients[usable]
        per_bin = (-np.log(ratio) / gamma.gamma[usable]).real
    return _summarize(per_bin, mode)


def propagate_uncertainty(
    pair: tuple[Spectrum, Spectrum],
    posterior: PosteriorTrace,
    n_draws: int,
    mode: str = "magnitude_only",
    seed: int = 0,
) -> DistanceEstimate:
    """Distance distribution pooled over posterior coefficient draws.

    Draws n_draws (chain, iteration) indices with a seeded generator,
    estimates per-bin distances for each drawn coefficient and pools all
    candidates before summarizing, so parameter uncertainty widens the
    distance distribution.
    """
    if n_draws < 1:
        raise InvalidInputError("n_draws must be >= 1")
    if posterior.n_kept == 0:
        raise InvalidInputError("posterior trace is empty")
    rng = np.random.default_rng(seed)
    chains = rng.integers(0, posterior.n_chains, size=n_draws)
    iters = rng.integers(0, posterior.n_kept, size=n_draws)
    pooled = []
    for chain, it in zip(chains, iters):
        gamma = posterior.gamma_draw(int(chain), int(it))
        try:
            est = estimate_distance(pair, gamma, mode)
        except DegenerateInputError:
            continue
        pooled.append(est.per_bin)
    if not pooled:
        raise DegenerateInputError("no posterior draw produced a usable estimate")
    return _summarize(np.concatenate(pooled), mode)


# ---------------------------------------------------------------------------
# Multilateration.
# ---------------------------------------------------------------------------


def _linearized_start(positions: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Closed-form start: subtract the first range equation from the rest."""
    ref = positions[0]
    a = 2.0 * (positions[1:] - ref)
    b = (
        radii[0] ** 2
        - radii[1:] ** 2
        + np.sum(positions[1:] ** 2, axis=1)
        - np.sum(ref**2)
    )
    start, *_ = np.linalg.lstsq(a, b, rcond=None)
    return start


def _range_residuals(p: np.ndarray, positions: np.ndarray, radii: np.ndarray):
    diff = p - positions
    dist = np.linalg.norm(diff, axis=1)
    return dist - radii, diff, dist


def _gauss_newton(p0, positions, radii, max_iter=200, tol=1e-13):
    """Damped Gauss-Newton; returns (point, cost, converged)."""
    p = np.asarray(p0, dtype=float).copy()
    r, diff, dist = _range_residuals(p, positions, radii)
    cost = float(r @ r)
    for _ in range(max_iter):
        safe = np.maximum(dist, 1e-12)
        jac = diff / safe[:, None]
        try:
            step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        except np.linalg.LinAlgError:
            return p, cost, False
        # backtrack until the full least-squares step stops overshooting
        scale = 1.0
        for _ in range(30):
            candidate = p - scale * step
            r_new, diff_new, dist_new = _range_residuals(candidate, positions, radii)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                break
            scale *= 0.5
        else:
            return p, cost, False  # stalled: no decrease along the GN direction
        moved = np.linalg.norm(scale * step)
        p, r, diff, dist, cost = candidate, r_new, diff_new, dist_new, cost_new
        if moved <= tol * max(1.0, float(np.linalg.norm(p))):
            return p, cost, True
    return p, cost, False


def trilaterate(anchors, multistart_seed: int = 0) -> PositionFix:
    """Recover a position from >= dim+1 anchors by range least squares.

    Gauss-Newton refines the linearized closed-form start; if it stalls,
    eight seeded restarts on the anchor bounding box are tried, and
    NoFixError (carrying the best residual) is raised if none converges.
    Collinear (2D) or coplanar (3D) anchor sets are rejected.
    """
    anchors = list(anchors)
    if not anchors:
        raise InvalidInputError("no anchors given")
    dim = anchors[0].position.size
    if any(a.position.size != dim for a in anchors):
        raise InvalidInputError("anchor dimensions are inconsistent")
    if len(anchors) < dim + 1:
        raise InvalidInputError(
            f"need at least {dim + 1} anchors for {dim}D, got {len(anchors)}"
        )
    positions = np.stack([a.position for a in anchors])
    radii = np.asarray([a.distance.mean for a in anchors], dtype=float)
    if (radii < 0).any():
        raise InvalidInputError("anchor distances must be non-negative")

    centered = positions - positions.mean(axis=0)
    scale = max(1.0, float(np.abs(centered).max()))
    rank = np.linalg.matrix_rank(centered, tol=1e-9 * scale)
    if rank < dim:
        kind = "collinear" if dim == 2 else "coplanar or collinear"
        raise DegenerateInputError(f"anchors are {kind}; cannot fix a {dim}D position")

    p, cost, converged = _gauss_newton(_linearized_start(positions, radii), positions, radii)
    if not converged:
        span = np.maximum(positions.max(axis=0) - positions.min(axis=0), 1.0)
        rng = np.random.default_rng(multistart_seed)
        for _ in range(8):
            start = positions.min(axis=0) + rng.uniform(size=dim) * span
            candidate, candidate_cost, ok = _gauss_newton(start, positions, radii)
            if candidate_cost < cost:
                p, cost = candidate, candidate_cost
            if ok:
                converged = True
                break
        if not converged:
            raise NoFixError(cost)

    return PositionFix(p, cost, _per_axis_std(p, positions, anchors))


def _per_axis_std(p, positions, anchors) -> np.ndarray:
    """First-order propagation of anchor distance stds to the fix axes."""
    r, diff, dist = _range_residuals(p, positions, np.zeros(len(anchors)))
    safe = np.maximum(dist, 1e-12)
    jac = diff / safe[:, None]
    stds = np.asarray([a.distance.std for a in anchors])
    try:
        pinv = np.linalg.pinv(jac)
    except np.linalg.LinAlgError:
        return np.full(p.size, np.nan)
    cov = pinv @ np.diag(stds**2) @ pinv.T
    return np.sqrt(np.maximum(np.diag(cov), 0.0))


def export_fix_json(fix: PositionFix, path) -> None:
    with open(path, "w") as fh:
        json.dump(fix.to_dict(), fh, indent=1)
        fh.write("\n")


def load_anchors(path) -> list[Anchor]:
    """Anchors manifest: {"anchors": [{"position": [...], "mean": d,
    "mode": d, "std": s, ...}]} (summary-only distance entries)."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "anchors" not in doc:
        raise InvalidInputError(f"{path}: anchors manifest needs an `anchors` list")
    anchors = []
    for entry in doc["anchors"]:
        mean = float(entry["mean"])
        est = DistanceEstimate(
            np.asarray([mean]),
            mean=mean,
            mode=float(entry.get("mode", mean)),
            std=float(entry.get("std", 0.0)),
            mode_flag=entry.get("mode_flag", "manifest"),
        )
        anchors.append(Anchor(entry["position"], est))
    return anchors
