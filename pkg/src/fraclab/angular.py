"""Angular meshes and one-dimensional forms on the polar interval [0, pi/2].

The polar angle phi measures the distance from the symmetry axis of the
upper half space: phi = 0 is the axis, phi = pi/2 the flat boundary.  All
half-sphere integrals reduce, harmonic sector by harmonic sector, to 1D
integrals against the degenerate weight cos^(1-2s)(phi) sin^(N-1)(phi);
this module builds graded meshes, piecewise-linear (P1) element matrices
for that weight, and the quadrature vectors the rest of the package shares.

Convention used package-wide: profiles and field slices are coefficients
of an L2-orthonormal spherical harmonic on the equator sphere, so the
1D weighted integrals below ARE the corresponding half-sphere integrals
(no extra surface-area factors anywhere).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MeshResolutionError

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class AngularMesh:
    """Strictly increasing polar nodes from 0 to pi/2, graded toward pi/2.

    grading > 1 clusters cells near the equator, where the weight
    cos^(1-2s) is singular for s > 1/2.
    """

    nodes: np.ndarray
    grading: float

    @staticmethod
    def make(n_cells, grading=3.0):
        if n_cells < 34:
            raise MeshResolutionError("need at least 34 cells (32 interior nodes)")
        if grading < 1.0:
            raise DomainError("grading exponent must be >= 1")
        u = np.linspace(0.0, 1.0, n_cells + 1)
        v = 1.0 - u
        # Pure power grading v^g would shrink the last cell to n^-g and blow
        # up the stiffness scale; below v_c switch to a linear map so the
        # smallest cell stays ~ (pi/2) n^-2 without affecting convergence.
        if grading > 1.0:
            v_c = float(n_cells) ** (-1.0 / (grading - 1.0))
            mapped = np.where(v >= v_c, v**grading, v * v_c ** (grading - 1.0))
        else:
            mapped = v
        nodes = 0.5 * math.pi * (1.0 - mapped)
        nodes[0] = 0.0
        nodes[-1] = 0.5 * math.pi
        return AngularMesh(nodes=nodes, grading=float(grading))

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes[0] != 0.0 or abs(nodes[-1] - 0.5 * math.pi) > 1e-14:
            raise DomainError("angular mesh must span [0, pi/2]")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("angular nodes must be strictly increasing")
        if nodes.size < 35:
            raise MeshResolutionError("need at least 32 interior nodes")
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_cells(self):
        return self.nodes.size - 1

    def refine(self):
        """Mesh with every cell split in half (used by convergence studies)."""
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        nodes = np.sort(np.concatenate([self.nodes, mid]))
        return AngularMesh(nodes=nodes, grading=self.grading)


def harmonic_multiplicity(N, ell):
    """Dimension of the degree-ell spherical harmonics on S^(N-1)."""
    if N < 2:
        raise DomainError("harmonic decomposition requires N >= 2")
    if ell == 0:
        return 1
    if N == 2:
        return 2
    return (2 * ell + N - 2) * math.comb(ell + N - 2, ell) // (ell + N - 2)


def _tridiag_from_cells(c00, c01, c11, n_nodes):
    """Assemble symmetric tridiagonal (diag, off) from per-cell 2x2 blocks."""
    d = np.zeros(n_nodes)
    d[:-1] += c00
    d[1:] += c11
    return d, c01.copy()


@dataclass(frozen=True)
class Tridiag:
    """Symmetric tridiagonal matrix stored as (diagonal, off-diagonal)."""

    d: np.ndarray
    e: np.ndarray

    @property
    def n(self):
        return self.d.size

    def matvec(self, x):
        y = self.d * x
        y[:-1] += self.e * x[1:]
        y[1:] += self.e * x[:-1]
        return y

    def form(self, x, y=None):
        """Quadratic/bilinear form x^T A y."""
        if y is None:
            y = x
        return float(x @ self.matvec(np.asarray(y, dtype=float)))

    def dense(self):
        a = np.diag(self.d)
        a += np.diag(self.e, 1) + np.diag(self.e, -1)
        return a

    def shifted(self, other, t):
        """self + t * other, both tridiagonal."""
        return Tridiag(self.d + t * other.d, self.e + t * other.e)

    def add_last_diag(self, value):
        d = self.d.copy()
        d[-1] += value
        return Tridiag(d, self.e)

    def drop_first(self):
        return Tridiag(self.d[1:].copy(), self.e[1:].copy())


class AngularOperator:
    """P1 discretization of the weighted angular forms in one harmonic sector.

    Holds the mass matrix M (weight cos^(1-2s) sin^(N-1)), the gradient
    stiffness G, and the sector potential ell(ell+N-2) with weight
    cos^(1-2s) sin^(N-3).  For ell >= 1 the pole value P(0) = 0 is imposed
    essentially; `active` maps reduced coefficient vectors back to the full
    node set.
    """

    def __init__(self, N, s, mesh, ell):
        if ell < 0:
            raise DomainError("sector index ell must be >= 0")
        if N < 2:
            raise DomainError("angular operator requires N >= 2")
        self.N = N
        self.s = float(s)
        self.mesh = mesh
        self.ell = int(ell)
        phi = mesh.nodes
        h = np.diff(phi)
        # Gauss points per cell, rows = cells.
        q = phi[:-1, None] + 0.5 * h[:, None] * (1.0 + _GAUSS_X[None, :])
        jac = 0.5 * h[:, None] * _GAUSS_W[None, :]
        cosq = np.cos(q)
        cosq[cosq < 1e-300] = 1e-300
        wmass = cosq ** (1.0 - 2.0 * self.s) * np.sin(q) ** (N - 1)
        # Local P1 shape functions on each cell.
        xi = (q - phi[:-1, None]) / h[:, None]
        n0, n1 = 1.0 - xi, xi
        m00 = np.sum(jac * wmass * n0 * n0, axis=1)
        m01 = np.sum(jac * wmass * n0 * n1, axis=1)
        m11 = np.sum(jac * wmass * n1 * n1, axis=1)
        wcell = np.sum(jac * wmass, axis=1)
        g = wcell / h**2
        n_nodes = phi.size
        self.mass_full = Tridiag(*_tridiag_from_cells(m00, m01, m11, n_nodes))
        self.stiff_full = Tridiag(*_tridiag_from_cells(g, -g, g, n_nodes))
        if ell >= 1:
            wpot = cosq ** (1.0 - 2.0 * self.s) * np.sin(q) ** (N - 3)
            coeff = float(ell * (ell + N - 2))
            p00 = coeff * np.sum(jac * wpot * n0 * n0, axis=1)
            p01 = coeff * np.sum(jac * wpot * n0 * n1, axis=1)
            p11 = coeff * np.sum(jac * wpot * n1 * n1, axis=1)
            self.pot_full = Tridiag(*_tridiag_from_cells(p00, p01, p11, n_nodes))
        else:
            z = np.zeros(n_nodes)
            self.pot_full = Tridiag(z, np.zeros(n_nodes - 1))
        self.constrained = ell >= 1
        if self.constrained:
            self.mass = self.mass_full.drop_first()
            self.grad = Tridiag(
                self.stiff_full.d[1:] + self.pot_full.d[1:],
                self.stiff_full.e[1:] + self.pot_full.e[1:],
            )
        else:
            self.mass = self.mass_full
            self.grad = Tridiag(
                self.stiff_full.d + self.pot_full.d,
                self.stiff_full.e + self.pot_full.e,
            )
        # Integration weights: integral of a P1 function f against the mass
        # weight is weights @ f (row sums of the mass matrix).
        self.weights_full = self.mass_full.matvec(np.ones(n_nodes))
        self.total_mass = float(np.sum(self.weights_full))

    def expand(self, reduced):
        """Reduced coefficient vector -> full node vector (P(0)=0 if ell>=1)."""
        reduced = np.asarray(reduced, dtype=float)
        if not self.constrained:
            return reduced.copy()
        full = np.zeros(reduced.size + 1)
        full[1:] = reduced
        return full

    def restrict(self, full):
        full = np.asarray(full, dtype=float)
        return full[1:].copy() if self.constrained else full.copy()

    def mass_form(self, p_full, q_full=None):
        """Weighted L2 inner product of full-node profiles."""
        q_full = p_full if q_full is None else q_full
        return self.mass_full.form(np.asarray(p_full, float), np.asarray(q_full, float))

    def grad_form(self, p_full, q_full=None):
        """Gradient + sector-potential energy of full-node profiles."""
        q_full = p_full if q_full is None else q_full
        p = np.asarray(p_full, dtype=float)
        q = np.asarray(q_full, dtype=float)
        out = self.stiff_full.form(p, q)
        if self.ell >= 1:
            out += self.pot_full.form(p, q)
        return out

    def project_mass(self, f_full):
        """Vector of integrals of f against each P1 basis function."""
        return self.mass_full.matvec(np.asarray(f_full, dtype=float))
