"""Geometric half-disk grids and radial quadrature in log-radius.

The radial direction is discretized geometrically (uniform in rho = ln r),
which turns every radially homogeneous piece of the problem into a pure
exponential of rho.  The composite quadrature below is exact for such
exponentials cell by cell (logarithmic-mean rule) and extends integrals
down to r = 0 by extrapolating the fitted decay of the two innermost
rings, mirroring how the solver closes its inner boundary.
"""

import math
from dataclasses import dataclass

import numpy as np

from .angular import AngularMesh
from .errors import DomainError


@dataclass(frozen=True)
class HalfDiskGrid:
    """Tensor grid: geometric radii r_0 = r_min .. r_m = R times a polar mesh.

    The radial span must cover at least four decades so that vanishing
    orders can be extracted from the innermost rings.
    """

    radii: np.ndarray
    mesh: AngularMesh
    R: float

    @staticmethod
    def make(R=1.0, r_min=1e-4, n_radial=160, n_angular=128, grading=3.0):
        if n_radial < 8:
            raise DomainError("need at least 8 radial cells")
        radii = np.geomspace(r_min, R, n_radial + 1)
        radii[-1] = R
        mesh = AngularMesh.make(n_angular, grading)
        return HalfDiskGrid(radii=radii, mesh=mesh, R=float(R))

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        if radii.ndim != 1 or radii.size < 3:
            raise DomainError("need at least 3 radial rings")
        if np.any(radii <= 0.0) or np.any(np.diff(radii) <= 0.0):
            raise DomainError("radii must be positive and strictly increasing")
        if radii[0] / radii[-1] > 1e-4 * (1.0 + 1e-12):
            raise DomainError("radial span must cover at least 4 decades")
        rho = np.log(radii)
        drho = np.diff(rho)
        if np.max(np.abs(drho - drho[0])) > 1e-10 * drho[0]:
            raise DomainError("radii must be geometric (uniform in log r)")
        object.__setattr__(self, "radii", radii)

    @property
    def n_rings(self):
        return self.radii.size

    @property
    def rho(self):
        return np.log(self.radii)

    @property
    def drho(self):
        return math.log(self.radii[1] / self.radii[0])

    @property
    def ratio(self):
        return self.radii[0] / self.radii[1]

    def with_inner_radius(self, r_min):
        """Same outer radius and densities, inner radius moved to r_min."""
        per_decade = (self.n_rings - 1) / math.log10(self.R / self.radii[0])
        n_radial = max(8, int(round(per_decade * math.log10(self.R / r_min))))
        return HalfDiskGrid(
            radii=np.geomspace(r_min, self.R, n_radial + 1),
            mesh=self.mesh,
            R=self.R,
        )

    def ring_index(self, r):
        """Index of the ring at radius r (must match a grid radius)."""
        i = int(np.argmin(np.abs(self.radii - r)))
        if abs(self.radii[i] - r) > 1e-9 * r:
            raise DomainError(f"radius {r:g} is not a grid ring")
        return i


def _cell_integrals(rho, samples):
    """Per-cell integrals of ring samples, exact for exponentials.

    Cells where both endpoint values share a sign use the logarithmic-mean
    rule (exact when the integrand is c*exp(a*rho)); sign changes and flat
    cells fall back to the trapezoid rule.
    """
    v0 = samples[:-1]
    v1 = samples[1:]
    widths = np.diff(rho)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = v1 / v0
        logr = np.log(np.abs(ratio))
        logmean = widths * (v1 - v0) / logr
    usable = (
        (v0 * v1 > 0.0)
        & np.isfinite(logmean)
        & (np.abs(logr) > 1e-8)
    )
    trap = 0.5 * widths * (v0 + v1)
    return np.where(usable, logmean, trap)


def _core_term(rho, samples):
    """Integral over (-inf, rho_0] of the power continuation of the samples.

    Fits c*exp(a*rho) through the two innermost rings; a must be positive
    (integrand decaying toward the origin), otherwise the core is reported
    as None.
    """
    v0, v1 = samples[0], samples[1]
    if v0 == 0.0 and v1 == 0.0:
        return 0.0
    if v0 * v1 <= 0.0:
        return None
    a = math.log(v1 / v0) / (rho[1] - rho[0]) if v1 / v0 > 0 else None
    if a is None or not math.isfinite(a) or a <= 1e-12:
        return None
    return v0 / a


class RadialRule:
    """Composite radial integrator over the rings of one grid."""

    def __init__(self, rho):
        self.rho = np.asarray(rho, dtype=float)

    def integrate(self, samples, rho_upper=None, include_core=False, strict_core=True):
        """Integral of the ring samples from the origin (or r_min) to rho_upper.

        With include_core the fitted-power continuation below the innermost
        ring is added; a non-decaying continuation raises (strict_core) or
        contributes zero.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.shape != self.rho.shape:
            raise DomainError("samples must be given per ring")
        if rho_upper is None:
            rho_upper = self.rho[-1]
        if rho_upper < self.rho[0] - 1e-12 or rho_upper > self.rho[-1] + 1e-12:
            raise DomainError("integration limit outside the radial span")
        cells = _cell_integrals(self.rho, samples)
        k = int(np.searchsorted(self.rho, rho_upper - 1e-13, side="left"))
        total = 0.0
        # full cells below, then the partial cell [rho_{k-1}, rho_upper]
        if k >= 1:
            total = float(np.sum(cells[: k - 1]))
            lo, hi = self.rho[k - 1], self.rho[k]
            frac = (rho_upper - lo) / (hi - lo)
            if frac > 1e-13:
                v0, v1 = samples[k - 1], samples[k]
                if v0 * v1 > 0.0 and abs(math.log(abs(v1 / v0))) > 1e-8:
                    a = math.log(v1 / v0) / (hi - lo)
                    total += v0 * (math.exp(a * (rho_upper - lo)) - 1.0) / a
                else:
                    vm = v0 + (v1 - v0) * frac
                    total += 0.5 * (v0 + vm) * (rho_upper - lo)
        else:
            total = 0.0
        if include_core:
            core = _core_term(self.rho, samples)
            if core is None:
                if strict_core:
                    raise DomainError(
                        "integrand does not decay toward the origin; core "
                        "extrapolation is undefined"
                    )
                core = 0.0
            total += core
        return total

    def cumulative(self, samples, include_core=False, strict_core=True):
        """Integrals from the origin (or r_min) up to every ring."""
        samples = np.asarray(samples, dtype=float)
        cells = _cell_integrals(self.rho, samples)
        out = np.concatenate([[0.0], np.cumsum(cells)])
        if include_core:
            core = _core_term(self.rho, samples)
            if core is None:
                if strict_core:
                    raise DomainError(
                        "integrand does not decay toward the origin; core "
                        "extrapolation is undefined"
                    )
                core = 0.0
            out = out + core
        return out
