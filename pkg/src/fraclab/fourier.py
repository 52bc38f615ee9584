"""Mode-decomposition route: expand fields in the angular eigenbasis, solve
the radial equations by variation of constants, and assemble the
asymptotic coefficients of the blow-up limit.

Each angular eigenvalue mu_k turns the extension problem into the radial
equation -phi'' - (N+1-2s)/tau phi' + mu_k/tau^2 phi = zeta_k with the
forcing produced by the perturbation h and the nonlinearity f on the
equator trace.  The general solution is the pair of power branches
tau^(sigma_k+-) dressed by integrals of zeta_k; the finite-energy
selection fixes the coefficient of the singular branch, the outer value
phi_k(R) fixes the other.  Semilinear problems iterate this map to a
fixed point, giving an independent discretization of the same boundary
value problem as the finite-element route.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .constants import characteristic_exponents
from .energies import FieldEnergies
from .errors import ConvergenceError, DomainError, IntegrityError
from .field import ExtensionField
from .grid import RadialRule

_PARSEVAL_SLACK = 1e-6


def _same_sector_entries(spec, ell, K):
    """Spectrum entries with matching sector among the first K repeated modes."""
    if K < 1:
        raise DomainError("truncation K must be >= 1")
    total = sum(m.multiplicity for m in spec.modes)
    if K > total:
        raise DomainError(f"K={K} exceeds the {total} computed modes")
    out = []
    for start, mode in zip(spec.k_start, spec.modes):
        if start > K:
            break
        if mode.ell == ell:
            out.append((start, mode))
    return out


def project_modes(field, spec, K):
    """Radial coefficient table phi_k(tau) for the first K repeated modes.

    Fields are single-sector, so projections onto modes of other sectors
    vanish identically and only the matching-sector rows are materialized;
    rows are returned in a dict keyed by the repeated index k (the first
    copy of each degenerate entry carries the sector coefficient).
    """
    en = FieldEnergies(field)
    entries = _same_sector_entries(spec, field.ell, K)
    table = {}
    for k, mode in entries:
        table[k] = np.array(
            [en.op.mass_form(field.values[i], mode.profile) for i in range(field.grid.n_rings)]
        )
    return table


def parseval_defect(field, spec, K):
    """Relative defect H(tau) - sum_k phi_k(tau)^2 at the outermost ring."""
    en = FieldEnergies(field)
    table = project_modes(field, spec, K)
    H = en.H_all()
    total = np.zeros_like(H)
    for coeffs in table.values():
        total += coeffs**2
    if np.any(total > H * (1.0 + _PARSEVAL_SLACK) + 1e-300):
        raise IntegrityError("mode energies exceed the boundary mass")
    return float(np.max((H - total) / np.maximum(H, 1e-300)))


def zeta_samples(mode, trace, grid, params, h_spec, f_spec):
    """Forcing zeta_k(tau) at the grid radii for one angular mode.

    For the radial data families in scope the equator integral collapses
    to trace_value * (h(tau) w_tr(tau) + f(w_tr(tau))) * kappa_s
    tau^(2s-2); modes with vanishing trace are never forced.
    """
    tau = grid.radii
    kappa = params.kappa
    out = np.zeros_like(tau)
    if mode.trace_value == 0.0:
        return out
    if h_spec is not None:
        out += kappa * h_spec.C_h * tau ** (h_spec.eps - 2.0) * trace
    if f_spec is not None and f_spec.c != 0.0:
        out += kappa * tau ** (2.0 * params.s - 2.0) * f_spec.value(trace)
    return out * mode.trace_value


@dataclass
class RadialSolution:
    """One radial coefficient phi_k with its branch decomposition."""

    tau: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    branch_plus: np.ndarray   # tau^sigma+ * (c1 + integral)
    branch_minus: np.ndarray  # tau^sigma- * (selected integral)
    exponents: object
    zeta: np.ndarray

    def ode_residual(self):
        """Relative defect of the radial equation reconstructed from the
        branch integrals (derivative-free: the branch derivatives are exact
        consequences of the variation-of-constants structure)."""
        sp, sm = self.exponents.sigma_plus, self.exponents.sigma_minus
        mu = self.exponents.mu
        tau = self.tau
        A = self.branch_plus / tau**sp
        B = self.branch_minus / tau**sm
        phi2 = (
            sp * (sp - 1.0) * tau ** (sp - 2.0) * A
            + sm * (sm - 1.0) * tau ** (sm - 2.0) * B
            - self.zeta
        )
        drift = 1.0 - (sp + sm)  # N + 1 - 2s
        lhs = -phi2 - drift / tau * self.phi_prime + mu / tau**2 * self.phi
        scale = (
            np.abs(self.zeta)
            + np.abs(mu * self.phi / tau**2)
            + np.abs(phi2)
            + 1e-300
        )
        return np.abs(lhs - self.zeta) / scale


def variation_of_constants(mode_mu, zeta, phi_outer, params, grid):
    """Radial coefficient from the two-branch integral representation.

    The singular-branch constant is fixed by the finite-energy selection
    (the branch must reduce to the integral from 0 to tau), the regular
    one by matching phi(R) = phi_outer; quadrature uses the fitted-power
    cell rule of the geometric grid, with the continuation below r_min.
    """
    pair = characteristic_exponents(params, mode_mu)
    sp, sm = pair.sigma_plus, pair.sigma_minus
    dsig = sp - sm
    tau = grid.radii
    rho = grid.rho
    rule = RadialRule(rho)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != tau.shape:
        raise DomainError("zeta must be sampled at the grid radii")

    plus_kernel = np.exp((2.0 - sp) * rho) * zeta / dsig
    minus_kernel = np.exp((2.0 - sm) * rho) * zeta / dsig
    if np.any(zeta != 0.0):
        # integrability probe: t^(1-sigma-) zeta must be summable at 0 (the
        # regular-branch integral never reaches the origin, so it needs no
        # condition there)
        try:
            rule.integrate(np.abs(minus_kernel), include_core=True, strict_core=True)
        except DomainError as exc:
            raise DomainError(
                "forcing is not integrable against the singular branch kernel"
            ) from exc
    cum_plus = rule.cumulative(plus_kernel, include_core=False)
    total_plus = cum_plus[-1]
    integral_plus = total_plus - cum_plus  # from tau to R
    cum_minus = rule.cumulative(minus_kernel, include_core=True, strict_core=False)

    R = tau[-1]
    c1 = phi_outer / R**sp - R ** (sm - sp) * cum_minus[-1]
    branch_plus = tau**sp * (c1 + integral_plus)
    branch_minus = tau**sm * cum_minus
    phi = branch_plus + branch_minus
    phi_prime = sp * tau ** (sp - 1.0) * (c1 + integral_plus) + sm * tau ** (
        sm - 1.0
    ) * cum_minus
    return RadialSolution(
        tau=tau,
        phi=phi,
        phi_prime=phi_prime,
        branch_plus=branch_plus,
        branch_minus=branch_minus,
        exponents=pair,
        zeta=zeta,
    )


@dataclass
class BetaResult:
    k: int
    formula: float
    direct: float

    @property
    def mismatch(self):
        return abs(self.formula - self.direct) / max(1.0, abs(self.direct))


@dataclass
class ModeExpansion:
    """Radial coefficients, forcings and asymptotic coefficients of a field."""

    radii: np.ndarray
    entries: tuple            # (k, AngularMode) pairs, matching sector only
    coeffs: dict              # k -> phi_k(tau)
    forcing: dict             # k -> zeta_k(tau)
    betas: tuple = dc_field(default=())
    K: int = 0

    def reconstruct_field(self, grid, params, ell):
        vals = np.zeros((grid.n_rings, grid.mesh.nodes.size))
        for k, mode in self.entries:
            vals += self.coeffs[k][:, None] * mode.profile[None, :]
        return ExtensionField(grid=grid, params=params, ell=ell, values=vals)

    def rows(self):
        out = []
        for k, _ in self.entries:
            phi = self.coeffs[k]
            zet = self.forcing.get(k)
            for i, tau in enumerate(self.radii):
                out.append((tau, k, phi[i], 0.0 if zet is None else zet[i]))
        return out


def beta_coefficients(field, spec, classification, gamma_hat, exclude_inner=2):
    """Asymptotic coefficients of the blow-up limit in the classified block.

    Each beta is evaluated twice: by the boundary-plus-correction formula
    (outer projection at R plus the weighted integral of the perturbation
    data against the two-power kernel) and directly as the limit of
    tau^(-gamma) phi_k(tau) at the innermost retained ring.
    """
    grid = field.grid
    params = field.params
    en = FieldEnergies(field)
    rule = RadialRule(grid.rho)
    rho = grid.rho
    tau = grid.radii
    R = grid.R
    a = params.N - 2.0 * params.s
    chi = 2.0 * gamma_hat + a
    if chi <= 0.0:
        raise IntegrityError("2 gamma + N - 2s must be positive")
    trace = field.trace_values()
    kappa = params.kappa
    data = np.zeros_like(tau)
    if field.h is not None:
        data += field.h.C_h * tau ** (-2.0 * params.s + field.h.eps) * trace
    if field.f is not None and field.f.c != 0.0:
        data += field.f.value(trace)

    results = []
    scale = 0.0
    for mode in classification.block_modes:
        if mode.ell != field.ell:
            continue
        k = None
        for start, m in zip(spec.k_start, spec.modes):
            if m is mode:
                k = start
                break
        phi = np.array(
            [en.op.mass_form(field.values[i], mode.profile) for i in range(grid.n_rings)]
        )
        formula = phi[-1] / R**gamma_hat
        if np.any(data != 0.0) and mode.trace_value != 0.0:
            kern1 = data * np.exp((2.0 * params.s - gamma_hat) * rho)
            kern2 = data * np.exp((gamma_hat + params.N) * rho)
            i1 = rule.integrate(kern1, include_core=True, strict_core=False)
            i2 = rule.integrate(kern2, include_core=True, strict_core=False)
            formula += (
                kappa * mode.trace_value * (i1 - i2 / R**chi) / chi
            )
        direct = phi[exclude_inner] / tau[exclude_inner] ** gamma_hat
        results.append(BetaResult(k=k, formula=float(formula), direct=float(direct)))
        scale = max(scale, abs(float(direct)))
    if not results:
        raise IntegrityError("classified block has no member in the field's sector")
    if scale < 1e-10:
        raise IntegrityError("all asymptotic coefficients vanish")
    return results


def picard_semilinear_modes(
    params, spec, g, grid, h_spec=None, f_spec=None, ell=0, K=None, tol=1e-10,
    max_iter=200, gamma_hint=None,
):
    """Fixed point of the mode-decomposed semilinear problem.

    Iterates (project trace -> forcing -> variation of constants ->
    reconstruct trace) with 0.5 damping whenever the update grows; the
    default truncation keeps every mode whose regular exponent is within
    4 of the leading one, so the omitted tail decays at least four powers
    faster than the solution itself.
    """
    op = spec.operator(ell)
    g_full = np.asarray(g, dtype=float)
    if g_full.shape != spec.mesh.nodes.shape:
        raise DomainError("boundary datum must be sampled at the angular mesh nodes")
    if K is None:
        lead = gamma_hint
        if lead is None:
            sector = [m for m in spec.modes if m.ell == ell]
            if not sector:
                raise DomainError(f"spectrum has no sector ell={ell} entry")
            lead = characteristic_exponents(params, sector[0].mu).sigma_plus
        K = 0
        for start, mode in zip(spec.k_start, spec.modes):
            if characteristic_exponents(params, mode.mu).sigma_plus <= lead + 4.0:
                K = max(K, start + mode.multiplicity - 1)
        K = max(K, 1)
    entries = _same_sector_entries(spec, ell, K)
    if not entries:
        raise DomainError("no matching-sector modes within the truncation")
    if f_spec is not None and f_spec.c != 0.0:
        f_spec.validate_subcritical(params)

    outer = {k: op.mass_form(g_full, mode.profile) for k, mode in entries}
    coeffs = {}
    for k, mode in entries:
        sol = variation_of_constants(
            mode.mu, np.zeros_like(grid.radii), outer[k], params, grid
        )
        coeffs[k] = sol.phi
    if h_spec is None and (f_spec is None or f_spec.c == 0.0):
        forcing = {k: np.zeros_like(grid.radii) for k, _ in entries}
        return ModeExpansion(
            radii=grid.radii,
            entries=tuple(entries),
            coeffs=coeffs,
            forcing=forcing,
            K=K,
        )

    history = []
    prev_change = math.inf
    for _ in range(max_iter):
        trace = np.zeros_like(grid.radii)
        for k, mode in entries:
            trace += coeffs[k] * mode.trace_value
        forcing = {}
        new_coeffs = {}
        for k, mode in entries:
            zeta = zeta_samples(mode, trace, grid, params, h_spec, f_spec)
            forcing[k] = zeta
            new_coeffs[k] = variation_of_constants(
                mode.mu, zeta, outer[k], params, grid
            ).phi
        num = 0.0
        den = 0.0
        for k, _ in entries:
            num += float(np.sum((new_coeffs[k] - coeffs[k]) ** 2))
            den += float(np.sum(new_coeffs[k] ** 2))
        change = math.sqrt(num / max(den, 1e-300))
        history.append(change)
        if change > prev_change:
            for k, _ in entries:
                new_coeffs[k] = 0.5 * (new_coeffs[k] + coeffs[k])
        prev_change = change
        coeffs = new_coeffs
        if change <= tol:
            return ModeExpansion(
                radii=grid.radii,
                entries=tuple(entries),
                coeffs=coeffs,
                forcing=forcing,
                K=K,
            )
    raise ConvergenceError(
        f"mode-space Picard iteration stalled above {tol:g}", history=history
    )
