"""Discrete extension fields on the half disk and their data families.

A field stores nodal values W(r_i, phi_j) of one harmonic sector of the
extension, together with the perturbation data (radial Hardy-subordinate
coefficient h and autonomous power nonlinearity f) it was solved with.
Values are coefficients of an orthonormal spherical harmonic of degree
`ell`; for ell = 0 multiply by |S^{N-1}|^(-1/2) to recover pointwise
values of the axisymmetric function.

Separable power fields r^sigma P(phi) are constructed with their exact
radial derivatives attached, so downstream energy quadratures reproduce
the continuum identities to rounding accuracy.
"""

import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from .angular import AngularOperator
from .constants import characteristic_exponents
from .errors import DomainError
from .grid import HalfDiskGrid, RadialRule

_MAGIC = b"AFLD"
_VERSION = 1


@dataclass(frozen=True)
class HPerturbation:
    """Radial linear perturbation h(x) = C_h |x|^(-2s+eps), eps > 0."""

    C_h: float
    eps: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise DomainError("perturbation exponent eps must be positive")


@dataclass(frozen=True)
class FNonlinearity:
    """Odd power nonlinearity f(t) = c |t|^(p-2) t with primitive c|t|^p / p."""

    c: float
    p: float

    def __post_init__(self):
        if self.p <= 2.0:
            raise DomainError("nonlinearity exponent p must exceed 2")

    def validate_subcritical(self, params):
        if self.p > params.critical_exponent + 1e-12:
            raise DomainError(
                f"p={self.p:g} exceeds the critical exponent "
                f"{params.critical_exponent:g}"
            )

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.c * np.abs(t) ** (self.p - 2.0) * t

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        return self.c * np.abs(t) ** self.p / self.p


@dataclass(frozen=True)
class BoundaryDatum:
    """Dirichlet values on the outer arc r = R at the angular nodes."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("boundary values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass
class ExtensionField:
    """Nodal field of one harmonic sector on a half-disk grid."""

    grid: HalfDiskGrid
    params: object
    ell: int
    values: np.ndarray  # shape (n_rings, n_angular_nodes)
    h: HPerturbation | None = None
    f: FNonlinearity | None = None
    radial_derivative: np.ndarray | None = None  # dW/drho, same shape
    diagnostics: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expect = (self.grid.n_rings, self.grid.mesh.nodes.size)
        if vals.shape != expect:
            raise DomainError(f"values must have shape {expect}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        self.values = vals
        if self.radial_derivative is not None:
            der = np.asarray(self.radial_derivative, dtype=float)
            if der.shape != expect:
                raise DomainError("radial derivative shape mismatch")
            self.radial_derivative = der

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_mode(grid, params, mode, amplitude=1.0, sigma=None):
        """Separable field amplitude * r^sigma P(phi) for one angular mode.

        sigma defaults to the positive characteristic exponent of mode.mu;
        the exact radial derivative sigma*W is attached.
        """
        if sigma is None:
            sigma = characteristic_exponents(params, mode.mu).sigma_plus
        radial = amplitude * grid.radii**sigma
        vals = radial[:, None] * mode.profile[None, :]
        return ExtensionField(
            grid=grid,
            params=params,
            ell=mode.ell,
            values=vals,
            radial_derivative=sigma * vals,
        )

    @staticmethod
    def from_modes(grid, params, weighted_modes):
        """Superposition sum_k a_k r^(sigma_k^+) P_k; modes must share a sector."""
        if not weighted_modes:
            raise DomainError("need at least one (mode, amplitude) pair")
        ells = {m.ell for m, _ in weighted_modes}
        if len(ells) != 1:
            raise DomainError("superposed modes must belong to one sector")
        vals = np.zeros((grid.n_rings, grid.mesh.nodes.size))
        der = np.zeros_like(vals)
        for mode, amp in weighted_modes:
            sigma = characteristic_exponents(params, mode.mu).sigma_plus
            radial = amp * grid.radii**sigma
            vals += radial[:, None] * mode.profile[None, :]
            der += sigma * radial[:, None] * mode.profile[None, :]
        return ExtensionField(
            grid=grid,
            params=params,
            ell=ells.pop(),
            values=vals,
            radial_derivative=der,
        )

    @staticmethod
    def from_function(grid, params, fn, ell=0, h=None, f=None):
        """Field sampled from a callable fn(r, phi) (meshgrid semantics)."""
        r, phi = np.meshgrid(grid.radii, grid.mesh.nodes, indexing="ij")
        return ExtensionField(
            grid=grid, params=params, ell=ell, values=fn(r, phi), h=h, f=f
        )

    # -- derived data -------------------------------------------------------

    def angular_operator(self):
        return AngularOperator(
            self.params.N, self.params.s, self.grid.mesh, self.ell
        )

    def radial_rule(self):
        return RadialRule(self.grid.rho)

    def w_rho(self):
        """dW/drho at the rings: stored exact values or finite differences.

        Interior rings use 4th-order central differences (2nd-order at the
        four outermost positions), which keeps derivative bias far below
        the tolerances of the energy identities.
        """
        if self.radial_derivative is not None:
            return self.radial_derivative
        w = self.values
        d = np.empty_like(w)
        h = self.grid.drho
        d[2:-2] = (-w[4:] + 8.0 * w[3:-1] - 8.0 * w[1:-3] + w[:-4]) / (12.0 * h)
        # 4th-order one-sided stencils at the edges: the innermost rings feed
        # the fitted-power continuation of the volume integrals, so their
        # derivative bias must match the interior order.
        d[0] = (-25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4]) / (
            12.0 * h
        )
        d[1] = (-3.0 * w[0] - 10.0 * w[1] + 18.0 * w[2] - 6.0 * w[3] + w[4]) / (12.0 * h)
        d[-2] = (3.0 * w[-1] + 10.0 * w[-2] - 18.0 * w[-3] + 6.0 * w[-4] - w[-5]) / (
            12.0 * h
        )
        d[-1] = (25.0 * w[-1] - 48.0 * w[-2] + 36.0 * w[-3] - 16.0 * w[-4] + 3.0 * w[-5]) / (
            12.0 * h
        )
        return d

    def trace_values(self):
        """Equator trace W(r, pi/2) per ring."""
        return self.values[:, -1]

    def scaled(self, c):
        return ExtensionField(
            grid=self.grid,
            params=self.params,
            ell=self.ell,
            values=c * self.values,
            h=self.h,
            f=self.f,
            radial_derivative=None
            if self.radial_derivative is None
            else c * self.radial_derivative,
            diagnostics=dict(self.diagnostics),
        )

    # -- I/O -----------------------------------------------------------------

    def write_csv(self, fh, config_hash=None):
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write("r,phi,w\n")
        for i, r in enumerate(self.grid.radii):
            for j, phi in enumerate(self.grid.mesh.nodes):
                fh.write(f"{r!r},{phi!r},{self.values[i, j]!r}\n")

    def write_binary(self, fh):
        """Row-major float64 dump behind a 16-byte header (magic,ver,m,n)."""
        m, n = self.values.shape
        fh.write(struct.pack("<4sIII", _MAGIC, _VERSION, m, n))
        fh.write(self.values.astype("<f8").tobytes(order="C"))

    @staticmethod
    def read_binary(fh, grid, params, ell=0):
        header = fh.read(16)
        magic, version, m, n = struct.unpack("<4sIII", header)
        if magic != _MAGIC or version != _VERSION:
            raise DomainError("not a field snapshot file")
        data = np.frombuffer(fh.read(8 * m * n), dtype="<f8").reshape(m, n)
        return ExtensionField(
            grid=grid, params=params, ell=ell, values=data.copy()
        )
