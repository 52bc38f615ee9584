import math

import numpy as np
import pytest
from scipy.linalg import eigh

from fraclab.angular import AngularMesh, AngularOperator, Tridiag, harmonic_multiplicity
from fraclab.constants import ProblemParams, lambda_of_alpha
from fraclab.errors import DomainError, MeshResolutionError
from fraclab.spectrum import (
    assemble_sl,
    rayleigh_quotient,
    solve_pencil,
    spectrum,
    trace_inequality_check,
)


@pytest.fixture(scope="module")
def mesh512():
    return AngularMesh.make(512)


@pytest.fixture(scope="module")
def mesh128():
    return AngularMesh.make(128)


class TestMesh:
    def test_structure(self, mesh128):
        nodes = mesh128.nodes
        assert nodes[0] == 0.0
        assert nodes[-1] == pytest.approx(math.pi / 2, abs=1e-15)
        assert np.all(np.diff(nodes) > 0)
        assert nodes.size - 2 >= 32

    def test_grading_clusters_at_equator(self, mesh128):
        h = np.diff(mesh128.nodes)
        assert h[-1] < h[0] / 50.0

    def test_too_coarse(self):
        with pytest.raises(MeshResolutionError):
            AngularMesh.make(16)


class TestMultiplicity:
    def test_known_dimensions(self):
        assert harmonic_multiplicity(3, 0) == 1
        assert harmonic_multiplicity(3, 1) == 3
        assert harmonic_multiplicity(3, 2) == 5
        assert harmonic_multiplicity(2, 1) == 2
        assert harmonic_multiplicity(2, 4) == 2
        assert harmonic_multiplicity(4, 2) == 9
        assert harmonic_multiplicity(5, 1) == 5


class TestAssembly:
    def test_constant_nullspace_at_lambda0(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        K, M = assemble_sl(p, 0, mesh128)
        ones = np.ones(K.n)
        # stored-diagonal rounding floor scales with the stiffness magnitude
        assert abs(K.form(ones)) < 1e-10

    def test_constant_sees_only_boundary_term(self, mesh128):
        p = ProblemParams(3, 0.5, 0.37)
        K, _ = assemble_sl(p, 0, mesh128)
        ones = np.ones(K.n)
        assert K.form(ones) == pytest.approx(-0.37 * p.kappa, rel=1e-9)

    def test_ell1_rayleigh_closed_case(self):
        # the coordinate profile sin(phi) has quotient N+1-2s at lambda=0
        p = ProblemParams(3, 0.5, 0.0)
        mesh = AngularMesh.make(512)
        prof = np.sin(mesh.nodes)
        rq = rayleigh_quotient(p, prof, 1, mesh)
        assert rq == pytest.approx(3.0, abs=2e-5)

    def test_mass_positive_definite(self, mesh128):
        p = ProblemParams(3, 0.75, 0.0)
        _, M = assemble_sl(p, 0, mesh128)
        evals = np.linalg.eigvalsh(M.dense())
        assert np.min(evals) > 0.0


class TestSolvePencil:
    def test_identity_like(self):
        d = np.ones(20)
        z = np.zeros(19)
        mus, _ = solve_pencil(Tridiag(d, z), Tridiag(d.copy(), z.copy()), 5)
        assert np.allclose(mus, 1.0, atol=1e-12)

    def test_diagonal(self):
        K = Tridiag(np.array([1.0, 2.0, 3.0]), np.zeros(2))
        M = Tridiag(np.ones(3), np.zeros(2))
        mus, _ = solve_pencil(K, M, 3)
        assert np.allclose(mus, [1.0, 2.0, 3.0], atol=1e-13)

    def test_random_pencil_against_dense_oracle(self):
        rng = np.random.default_rng(7)
        n = 50
        K = Tridiag(2.0 * rng.standard_normal(n), rng.standard_normal(n - 1))
        M = Tridiag(rng.uniform(1.0, 2.0, n), rng.uniform(-0.3, 0.3, n - 1))
        mus, X = solve_pencil(K, M, 8)
        ref = eigh(K.dense(), M.dense(), eigvals_only=True)[:8]
        assert np.max(np.abs(mus - ref)) < 1e-9
        gram = X.T @ M.dense() @ X
        assert np.max(np.abs(gram - np.eye(8))) < 1e-10

    def test_count_exceeds_dofs(self):
        K = Tridiag(np.ones(3), np.zeros(2))
        with pytest.raises(MeshResolutionError):
            solve_pencil(K, K, 10)


class TestSpectrum:
    def test_lambda0_constant_mode(self, mesh512):
        p = ProblemParams(3, 0.5, 0.0)
        sp = spectrum(p, ell_max=1, per_ell=1, mesh=mesh512)
        assert abs(sp.modes[0].mu) < 1e-8
        assert sp.modes[0].ell == 0
        assert sp.modes[0].multiplicity == 1
        prof = sp.modes[0].profile
        assert np.max(np.abs(prof - prof[0])) < 1e-6 * abs(prof[0])

    def test_lambda0_coordinate_block(self, mesh512):
        p = ProblemParams(3, 0.5, 0.0)
        sp = spectrum(p, ell_max=2, per_ell=2, mesh=mesh512)
        ell1 = sp.sector_modes(1)[0]
        assert ell1.mu == pytest.approx(3.0, abs=1e-4)
        assert ell1.multiplicity == 3
        # second distinct eigenvalue of the merged list is the ell=1 block
        blocks = sp.distinct_blocks()
        assert blocks[1]["mu"] == pytest.approx(3.0, abs=1e-4)
        assert blocks[1]["multiplicity"] == 3

    def test_lambda0_all_nonnegative(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        sp = spectrum(p, ell_max=2, per_ell=3, mesh=mesh128)
        assert all(m.mu > -1e-8 for m in sp.modes)

    def test_gamma_identity_chain(self, mesh512):
        p0 = ProblemParams(3, 0.5, 0.0)
        for frac in (0.1, 0.25, 0.5, 0.75, 0.9):
            alpha = frac * 1.0
            lam = lambda_of_alpha(p0, alpha)
            p = ProblemParams(3, 0.5, lam)
            sp = spectrum(p, ell_max=0, per_ell=1, mesh=mesh512)
            assert sp.modes[0].mu == pytest.approx(alpha**2 - 1.0, abs=1e-4)

    def test_gamma_identity_second_order_decay(self):
        p0 = ProblemParams(3, 0.5, 0.0)
        lam = lambda_of_alpha(p0, 0.5)
        p = ProblemParams(3, 0.5, lam)
        errs = []
        for n in (128, 256):
            sp = spectrum(p, ell_max=0, per_ell=1, mesh=AngularMesh.make(n))
            errs.append(abs(sp.modes[0].mu + 0.75))
        assert errs[0] / errs[1] >= 3.0

    def test_mu1_strictly_decreasing_in_lambda(self, mesh128):
        mus = []
        for lam in (0.0, 0.2, 0.4, 0.6):
            p = ProblemParams(3, 0.5, lam)
            sp = spectrum(p, ell_max=0, per_ell=1, mesh=mesh128)
            mus.append(sp.modes[0].mu)
        assert all(a > b for a, b in zip(mus, mus[1:]))

    def test_lower_bound(self, mesh128):
        for lam in (0.0, 0.3, 0.6):
            p = ProblemParams(3, 0.5, lam)
            sp = spectrum(p, ell_max=2, per_ell=2, mesh=mesh128)
            for m in sp.modes:
                assert m.mu > -1.0

    def test_normalization_and_orthogonality(self, mesh128):
        p = ProblemParams(3, 0.5, 0.5)
        sp = spectrum(p, ell_max=1, per_ell=3, mesh=mesh128)
        op0 = sp.operator(0)
        sector = sp.sector_modes(0)
        for m in sector:
            assert op0.mass_form(m.profile) == pytest.approx(1.0, abs=1e-8)
        for i in range(len(sector)):
            for j in range(i + 1, len(sector)):
                inner = op0.mass_form(sector[i].profile, sector[j].profile)
                assert abs(inner) < 1e-8

    def test_k_index_bookkeeping(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        sp = spectrum(p, ell_max=1, per_ell=1, mesh=mesh128)
        assert sp.mode_for_k(1).ell == 0
        assert sp.mode_for_k(2).ell == 1
        assert sp.mode_for_k(4).ell == 1
        with pytest.raises(DomainError):
            sp.mode_for_k(99)

    def test_mesh_too_coarse_for_count(self):
        p = ProblemParams(3, 0.5, 0.0)
        mesh = AngularMesh.make(40)
        with pytest.raises(MeshResolutionError):
            spectrum(p, ell_max=0, per_ell=60, mesh=mesh)


class TestRayleighQuotient:
    def test_constant_at_lambda0(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        prof = np.ones(mesh128.nodes.size)
        assert rayleigh_quotient(p, prof, 0, mesh128) == pytest.approx(0.0, abs=1e-10)

    def test_constant_negative_for_positive_lambda(self, mesh128):
        p = ProblemParams(3, 0.5, 0.4)
        prof = np.ones(mesh128.nodes.size)
        op = AngularOperator(3, 0.5, mesh128, 0)
        expected = -0.4 * p.kappa / op.total_mass
        got = rayleigh_quotient(p, prof, 0, mesh128)
        assert got == pytest.approx(expected, rel=1e-9)
        assert got < 0.0

    def test_eigenpair_consistency(self, mesh128):
        p = ProblemParams(3, 0.5, 0.5)
        sp = spectrum(p, ell_max=0, per_ell=2, mesh=mesh128)
        for m in sp.sector_modes(0):
            rq = rayleigh_quotient(p, m.profile, 0, mesh128)
            assert rq == pytest.approx(m.mu, abs=1e-9 * max(1.0, abs(m.mu)))

    def test_zero_profile_rejected(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        with pytest.raises(DomainError):
            rayleigh_quotient(p, np.zeros(mesh128.nodes.size), 0, mesh128)


class TestTraceInequality:
    def test_constant_profile(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        prof = np.ones(mesh128.nodes.size)
        lhs, rhs = trace_inequality_check(p, prof, 0, mesh128)
        op = AngularOperator(3, 0.5, mesh128, 0)
        assert lhs == pytest.approx(p.kappa * p.hardy_constant, rel=1e-12)
        assert rhs == pytest.approx(op.total_mass, rel=1e-10)
        assert lhs <= rhs

    def test_zero_trace_profile(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        prof = np.sin(2.0 * mesh128.nodes) ** 2
        prof[-1] = 0.0
        lhs, rhs = trace_inequality_check(p, prof, 0, mesh128)
        assert lhs == 0.0
        assert rhs > 0.0

    def test_random_profiles_all_pass(self, mesh128):
        p = ProblemParams(3, 0.5, 0.0)
        rng = np.random.default_rng(11)
        for _ in range(100):
            prof = rng.standard_normal(mesh128.nodes.size)
            lhs, rhs = trace_inequality_check(p, prof, 0, mesh128)
            assert lhs <= rhs * (1.0 + 1e-12)

    def test_random_profiles_other_s(self):
        mesh = AngularMesh.make(64)
        rng = np.random.default_rng(12)
        for (N, s) in ((2, 0.3), (4, 0.7)):
            p = ProblemParams(N, s, 0.0)
            for _ in range(50):
                prof = rng.standard_normal(mesh.nodes.size)
                lhs, rhs = trace_inequality_check(p, prof, 0, mesh)
                assert lhs <= rhs * (1.0 + 1e-12)


class TestEigenfunctionBoundaryBehaviour:
    def test_mu1_eigenfunction_positive(self, mesh128):
        p = ProblemParams(3, 0.5, 0.5)
        sp = spectrum(p, ell_max=0, per_ell=1, mesh=mesh128)
        prof = sp.modes[0].profile
        assert np.all(prof > 0.0)
        assert sp.modes[0].trace_value > 0.0
