"""Frequency-function analysis: the ratio N(r) = D(r)/H(r), its limit at the
origin, two-sided mass bounds, blow-up profiles, and vanishing orders.

The limit gamma of the frequency is extracted twice, by a least-squares
fit of N(r) = gamma + C r^delta over the innermost sampled decades and by
Aitken extrapolation of the innermost retained rings; both values are
reported together with their mutual agreement.  The classified gamma ties
the field to an eigenvalue of the half-sphere problem through
mu = gamma^2 + (N-2s) gamma.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .energies import FieldEnergies, _ring_form
from .errors import DomainError, IntegrityError

_EXCLUDE_INNER = 2
_EXCLUDE_OUTER = 1
_FIT_DECADES = 1.5


@dataclass
class FrequencyTrace:
    """Sampled H, D, N curves (radii decreasing) and the extracted limit."""

    radii: np.ndarray
    H_values: np.ndarray
    D_values: np.ndarray
    N_values: np.ndarray
    gamma_hat: float
    gamma_stderr: float
    delta_hat: float
    fit_amplitude: float
    gamma_richardson: float
    estimators_agree: bool
    N_max: float
    params: object = None

    def rows(self):
        return list(zip(self.radii, self.H_values, self.D_values, self.N_values))


@dataclass
class Classification:
    """Nearest spectral block to mu(gamma_hat) and the matching quality."""

    k0: int
    mu_k0: float
    gap: float
    relative_gap: float
    confident: bool
    block_multiplicity: int
    block_modes: tuple = dc_field(default=())


@dataclass
class DoublingBounds:
    K1: float
    K2: float
    sigma: float
    limit_samples: np.ndarray  # r^(-2 gamma) H(r) at the innermost rings
    stabilization: float  # max/min - 1 of the samples over the last decade


@dataclass
class BlowupProfile:
    tau: float
    profile: np.ndarray
    distance_to_eigenspace: float


@dataclass
class VanishingOrder:
    gamma: float
    infinite_order: bool


def _fit_window(grid, decades=_FIT_DECADES):
    i0 = _EXCLUDE_INNER
    span = decades * math.log(10.0)
    i1 = min(
        grid.n_rings - 1 - _EXCLUDE_OUTER,
        i0 + max(4, int(math.ceil(span / grid.drho))),
    )
    if i1 - i0 < 4:
        raise DomainError("radial grid too short for the frequency fit window")
    return i0, i1


def frequency_trace(field, fit_decades=_FIT_DECADES):
    """Sample N(r) on the radial rings and extract its limit at the origin.

    Requires a solution-like field: positive boundary mass on every ring
    and a frequency respecting the universal lower bound.  The fit model
    N(r) = gamma + C r^delta is resolved by a grid search over delta with
    linear least squares for (gamma, C).
    """
    en = FieldEnergies(field)
    H = en.H_all()
    if np.any(H <= 0.0):
        raise IntegrityError("H(r) vanishes on a ring; field is not a solution")
    D = en.D_all()
    N = D / H
    a = en.a
    if np.any(N <= -0.5 * a):
        raise IntegrityError(
            "frequency dips below -(N-2s)/2; field violates the solution bound"
        )
    grid = field.grid
    i0, i1 = _fit_window(grid, fit_decades)
    r_fit = grid.radii[i0 : i1 + 1]
    n_fit = N[i0 : i1 + 1]

    best = None
    for delta in np.geomspace(0.05, 4.0, 80):
        X = np.column_stack([np.ones_like(r_fit), r_fit**delta])
        coef, res, *_ = np.linalg.lstsq(X, n_fit, rcond=None)
        sse = float(res[0]) if res.size else float(
            np.sum((n_fit - X @ coef) ** 2)
        )
        if best is None or sse < best[0]:
            best = (sse, delta, coef, X)
    sse, delta_hat, coef, X = best
    gamma_hat, amp = float(coef[0]), float(coef[1])
    dof = max(len(r_fit) - 2, 1)
    sigma2 = sse / dof
    try:
        cov = sigma2 * np.linalg.inv(X.T @ X)
        gamma_stderr = math.sqrt(max(cov[0, 0], 0.0))
    except np.linalg.LinAlgError:
        gamma_stderr = float("nan")

    # Aitken extrapolation of the three innermost retained rings (spaced a
    # few rings apart so the finite difference sees the actual drift, not noise).
    k = max(2, (i1 - i0) // 8)
    n0, n1, n2 = N[i0], N[i0 + k], N[i0 + 2 * k]
    denom = n2 - 2.0 * n1 + n0
    if abs(denom) > 1e3 * np.finfo(float).eps * max(1.0, abs(n0)):
        gamma_r = n0 - (n1 - n0) ** 2 / denom
    else:
        gamma_r = float(n0)
    if not math.isfinite(gamma_r) or abs(gamma_r - gamma_hat) > 0.5:
        gamma_r = float(n0)
    agree = abs(gamma_hat - gamma_r) <= max(3.0 * gamma_stderr, 2e-3)

    order = np.argsort(grid.radii)[::-1]
    return FrequencyTrace(
        radii=grid.radii[order],
        H_values=H[order],
        D_values=D[order],
        N_values=N[order],
        gamma_hat=gamma_hat,
        gamma_stderr=gamma_stderr,
        delta_hat=float(delta_hat),
        fit_amplitude=amp,
        gamma_richardson=float(gamma_r),
        estimators_agree=bool(agree),
        N_max=float(np.max(N)),
        params=field.params,
    )


def classify_mode(gamma_hat, spec):
    """Nearest spectral block to mu(gamma_hat) = gamma^2 + (N-2s) gamma.

    The match is confident only when the gap is below half the distance to
    the next distinct eigenvalue and the target lies inside the range where
    the computed spectrum is guaranteed complete; otherwise the result is
    returned with confident=False (never an exception).
    """
    params = spec.params
    a = params.N - 2.0 * params.s
    mu_target = gamma_hat * gamma_hat + a * gamma_hat
    blocks = spec.distinct_blocks()
    if not blocks:
        raise DomainError("empty spectrum")
    gaps = [abs(b["mu"] - mu_target) for b in blocks]
    j = int(np.argmin(gaps))
    gap = gaps[j]
    others = [abs(blocks[i]["mu"] - blocks[j]["mu"]) for i in range(len(blocks)) if i != j]
    next_dist = min(others) if others else math.inf
    confident = gap < 0.5 * next_dist and mu_target < spec.complete_below
    block = blocks[j]
    return Classification(
        k0=block["k_start"],
        mu_k0=block["mu"],
        gap=gap,
        relative_gap=gap / max(1.0, abs(block["mu"])),
        confident=bool(confident),
        block_multiplicity=block["multiplicity"],
        block_modes=tuple(block["modes"]),
    )


def doubling_bounds(trace, sigma=0.1):
    """Empirical constants of the two-sided mass bounds H <= K1 r^(2 gamma),
    H >= K2 r^(2 gamma + sigma), plus the stabilization of r^(-2 gamma) H
    over the innermost sampled decade."""
    r = trace.radii
    H = trace.H_values
    g = trace.gamma_hat
    ratios = H / r ** (2.0 * g)
    K1 = float(np.max(ratios))
    K2 = float(np.min(H / r ** (2.0 * g + sigma)))
    r_min = float(np.min(r))
    samples = ratios[r <= r_min * 10.0]
    # drop the rings touching the closure
    samples = samples[: max(samples.size - _EXCLUDE_INNER, 1)]
    stab = float(np.max(samples) / np.min(samples) - 1.0) if samples.size else math.inf
    if K2 <= 0.0:
        raise IntegrityError("lower mass bound constant is not positive")
    return DoublingBounds(
        K1=K1, K2=K2, sigma=sigma, limit_samples=samples, stabilization=stab
    )


def blowup_profile(field, tau, classification):
    """Angular slice w(tau *)/sqrt(H(tau)) and its weighted-L2 distance to
    the classified eigenspace (all multiplicity copies, basis independent)."""
    en = FieldEnergies(field)
    h_tau = en.H(tau)
    if h_tau <= 0.0:
        raise IntegrityError("H(tau) vanishes; cannot normalize the profile")
    vals = en.ring_values(tau) / math.sqrt(h_tau)
    op = en.op
    proj_sq = 0.0
    for mode in classification.block_modes:
        if mode.ell != field.ell:
            continue
        proj_sq += op.mass_form(vals, mode.profile) ** 2
    dist_sq = max(op.mass_form(vals) - proj_sq, 0.0)
    return BlowupProfile(
        tau=float(tau),
        profile=vals,
        distance_to_eigenspace=math.sqrt(dist_sq),
    )


def vanishing_order(field, n_flag=10, fit_decades=_FIT_DECADES):
    """Vanishing order of the field at the origin, with the infinite-order
    flag raised only when the boundary mass decays faster than r^(2 n_flag)
    across the innermost two decades (the trivial field qualifies)."""
    en = FieldEnergies(field)
    H = en.H_all()
    scale = float(np.max(H))
    if scale <= 0.0:
        return VanishingOrder(gamma=math.inf, infinite_order=True)
    grid = field.grid
    r_min = grid.radii[0]
    window = (grid.radii <= r_min * 100.0) & (H > 0.0)
    window[: _EXCLUDE_INNER] = False
    if np.count_nonzero(window) >= 4:
        slope = np.polyfit(
            np.log(grid.radii[window]), np.log(H[window]), 1
        )[0]
        if 0.5 * slope > n_flag:
            return VanishingOrder(gamma=0.5 * slope, infinite_order=True)
    if np.any(H <= 0.0):
        return VanishingOrder(gamma=math.inf, infinite_order=True)
    trace = frequency_trace(field, fit_decades)
    return VanishingOrder(gamma=trace.gamma_hat, infinite_order=False)


def project_profile_norm(field, tau):
    """Weighted angular norm of the slice at tau (diagnostic helper)."""
    en = FieldEnergies(field)
    vals = en.ring_values(tau)
    return math.sqrt(max(_ring_form(en.op.mass_full, vals[None, :])[0], 0.0))
