"""Weighted energy integrals of extension fields: boundary mass H(r),
localized energy D(r), and the structural identities relating them.

All sphere integrals reduce to the per-ring quadratic forms of the shared
angular discretization; volume integrals are their radial accumulations
in log-radius, extended below the innermost ring by the fitted-power
continuation.  For separable power fields built from computed modes this
makes H, D and the Pohozaev balance exact discrete identities, so any
assembly error shows up loudly.
"""

import math

import numpy as np

from .errors import DomainError, IntegrityError
from .grid import RadialRule

_TINY = 1e-300


def _ring_form(T, W):
    """Quadratic form of a tridiagonal matrix applied ring-wise, W (m, n)."""
    out = np.einsum("ij,j,ij->i", W, T.d, W)
    out += 2.0 * np.einsum("ij,j,ij->i", W[:, :-1], T.e, W[:, 1:])
    return out


class FieldEnergies:
    """Cached per-ring energies and radial accumulators for one field."""

    def __init__(self, field):
        self.field = field
        self.params = field.params
        self.grid = field.grid
        self.op = field.angular_operator()
        self.rule = RadialRule(self.grid.rho)
        self.a = self.params.N - 2.0 * self.params.s
        w = field.values
        wr = field.w_rho()
        self.H_ring = _ring_form(self.op.mass_full, w)
        self.E_ring = _ring_form(self.op.mass_full, wr)
        grad = _ring_form(self.op.stiff_full, w)
        if field.ell >= 1:
            grad += _ring_form(self.op.pot_full, w)
        self.A_ring = grad
        self.trace = field.trace_values()
        self.trace_rho = wr[:, -1]
        rho = self.grid.rho
        ea = np.exp(self.a * rho)
        # d/drho of the volume gradient energy and of the boundary potential
        # integrals (Hardy, h, and nonlinear terms).
        self.vol_density = ea * (self.E_ring + self.A_ring)
        self.hardy_density = ea * self.trace**2
        kappa = self.params.kappa
        pot = self.params.lam * kappa * self.hardy_density
        if field.h is not None:
            self.h_density = np.exp((self.a + field.h.eps) * rho) * self.trace**2
            pot = pot + kappa * field.h.C_h * self.h_density
        else:
            self.h_density = np.zeros_like(rho)
        if field.f is not None:
            self.f_density = np.exp(self.params.N * rho) * np.abs(self.trace) ** (
                field.f.p
            )
            pot = pot + kappa * field.f.c * self.f_density
        else:
            self.f_density = np.zeros_like(rho)
        self.d_density = self.vol_density - pot

    # -- pointwise quantities ------------------------------------------------

    def ring_values(self, r):
        """Nodal values at radius r, linear interpolation in log-radius."""
        rho = self.grid.rho
        x = math.log(r)
        if x < rho[0] - 1e-12 or x > rho[-1] + 1e-12:
            raise DomainError(f"radius {r:g} outside the grid span")
        k = min(max(int(np.searchsorted(rho, x)) - 1, 0), rho.size - 2)
        t = (x - rho[k]) / (rho[k + 1] - rho[k])
        t = min(max(t, 0.0), 1.0)
        return (1.0 - t) * self.field.values[k] + t * self.field.values[k + 1]

    def H(self, r):
        i = np.argmin(np.abs(self.grid.radii - r))
        if abs(self.grid.radii[i] - r) <= 1e-9 * r:
            return float(self.H_ring[i])
        vals = self.ring_values(r)
        return float(self.op.mass_form(vals))

    def D(self, r):
        x = math.log(r)
        total = self.rule.integrate(self.d_density, rho_upper=x, include_core=True)
        return math.exp(-self.a * x) * total

    def H_all(self):
        return self.H_ring.copy()

    def D_all(self):
        """D at every ring via cumulative integration (shares the core term)."""
        cum = self.rule.cumulative(self.d_density, include_core=True)
        return np.exp(-self.a * self.grid.rho) * cum

    # -- structural identities ------------------------------------------------

    def h_prime_residual(self, r):
        """Relative defect of the mass-flux identity H'(r) = (2/r) D(r).

        H' is computed by centered differencing of the ring values of H in
        log-radius (4th order where the stencil fits), so this check is an
        independent cross of the surface and volume quadrature routes.
        """
        i = self.grid.ring_index(r)
        if i < 1 or i > self.grid.n_rings - 2:
            raise DomainError("need an interior ring for the centered difference")
        h = self.grid.drho
        H = self.H_ring
        if 2 <= i <= self.grid.n_rings - 3:
            dH = (-H[i + 2] + 8.0 * H[i + 1] - 8.0 * H[i - 1] + H[i - 2]) / (12.0 * h)
        else:
            dH = (H[i + 1] - H[i - 1]) / (2.0 * h)
        hprime = dH / r
        rhs = 2.0 * self.D(r) / r
        scale = abs(hprime) + abs(rhs)
        if scale < _TINY:
            return 0.0
        return abs(hprime - rhs) / scale

    def pohozaev_residual(self, r):
        """Normalized defect of the multiplier identity at radius r.

        Assembles all terms of the balance independently (volume energies,
        sphere terms, Hardy boundary integrals, perturbation and
        nonlinearity contributions) and returns |LHS - RHS| over the
        largest magnitude involved.
        """
        i = self.grid.ring_index(r)
        if i < 2:
            raise DomainError("Pohozaev check requires r at least 2 rings above r_min")
        x = math.log(r)
        kappa = self.params.kappa
        lam = self.params.lam
        a = self.a
        vol = self.rule.integrate(self.vol_density, rho_upper=x, include_core=True)
        har = self.rule.integrate(
            self.hardy_density, rho_upper=x, include_core=True, strict_core=False
        )
        b_grad = r ** (a - 1.0) * (self.E_ring[i] + self.A_ring[i])
        b_har = kappa * lam * r ** (a - 1.0) * self.trace[i] ** 2
        flux = r ** (a - 1.0) * self.E_ring[i]
        lhs = -0.5 * a * (vol - kappa * lam * har) + 0.5 * r * (b_grad - b_har)
        rhs = r * flux
        terms = [
            0.5 * a * vol,
            0.5 * a * kappa * lam * har,
            0.5 * r * b_grad,
            0.5 * r * b_har,
            r * flux,
        ]
        fld = self.field
        if fld.h is not None:
            j_h = self.rule.integrate(
                self.h_density, rho_upper=x, include_core=True, strict_core=False
            )
            t_vol = 0.5 * kappa * (a + fld.h.eps) * fld.h.C_h * j_h
            t_ring = 0.5 * kappa * fld.h.C_h * r ** (a + fld.h.eps) * self.trace[i] ** 2
            rhs += -t_vol + t_ring
            terms += [t_vol, t_ring]
        if fld.f is not None:
            j_f = self.rule.integrate(
                self.f_density, rho_upper=x, include_core=True, strict_core=False
            )
            c_over_p = fld.f.c / fld.f.p
            t_ring = kappa * c_over_p * r**self.params.N * abs(self.trace[i]) ** fld.f.p
            t_vol = kappa * self.params.N * c_over_p * j_f
            rhs += t_ring - t_vol
            terms += [t_ring, t_vol]
        scale = max(max(abs(t) for t in terms), _TINY)
        return abs(lhs - rhs) / scale


def H_of_r(field, r):
    """Boundary mass H(r): weighted angular integral of w^2 on the r-sphere."""
    return FieldEnergies(field).H(r)


def D_of_r(field, r):
    """Localized energy D(r): weighted gradient integral minus the boundary
    potential terms, normalized by r^(N-2s)."""
    return FieldEnergies(field).D(r)


def h_prime_identity_residual(field, r):
    return FieldEnergies(field).h_prime_residual(r)


def pohozaev_residual(field, r):
    return FieldEnergies(field).pohozaev_residual(r)


def weighted_l2_distance(field_a, field_b):
    """Relative weighted L2 distance between two fields on one grid."""
    if field_a.grid.n_rings != field_b.grid.n_rings:
        raise DomainError("fields live on different grids")
    ea = FieldEnergies(field_a)
    diff = field_a.values - field_b.values
    op = ea.op
    d_ring = _ring_form(op.mass_full, diff)
    rho = field_a.grid.rho
    rule = RadialRule(rho)
    weight = np.exp((ea.a + 2.0) * rho)  # volume element of the weighted L2 norm
    num = rule.integrate(weight * d_ring)
    den = rule.integrate(weight * _ring_form(op.mass_full, field_a.values))
    if den <= 0.0:
        raise IntegrityError("reference field has zero weighted norm")
    return math.sqrt(max(num, 0.0) / den)
