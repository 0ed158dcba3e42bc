import numpy as np
import pytest

from chdisguise import matkit
from chdisguise.errors import ValidationError

from conftest import random_hermitian


class TestHermitianEig:
    def test_diagonal_matrix(self):
        es = matkit.hermitian_eig(np.diag([3.0, 1.0, -2.0]))
        assert np.allclose(es.eigenvalues, [3.0, 1.0, -2.0])
        assert np.allclose(np.abs(es.eigenvectors), np.eye(3))

    def test_pauli_x(self):
        es = matkit.hermitian_eig(np.array([[0, 1], [1, 0]], dtype=complex))
        assert np.allclose(es.eigenvalues, [1.0, -1.0])

    def test_reconstruction_random_8x8(self):
        rng = np.random.default_rng(7)
        m = random_hermitian(rng, 8)
        es = matkit.hermitian_eig(m)
        rec = (es.eigenvectors * es.eigenvalues) @ es.eigenvectors.conj().T
        assert matkit.spectral_norm(rec - m) <= 1e-9 * matkit.spectral_norm(m)

    def test_orthonormal_vectors(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 5, 8):
            es = matkit.hermitian_eig(random_hermitian(rng, n))
            gram = es.eigenvectors.conj().T @ es.eigenvectors
            assert np.abs(gram - np.eye(n)).max() <= 1e-10

    def test_eigenvalue_sum_matches_trace(self):
        rng = np.random.default_rng(13)
        for n in (2, 4, 6):
            m = random_hermitian(rng, n, scale=3.0)
            es = matkit.hermitian_eig(m)
            tr = np.trace(m).real
            assert abs(es.eigenvalues.sum() - tr) <= 1e-9 * (1 + abs(tr))

    def test_deterministic(self):
        rng = np.random.default_rng(17)
        m = random_hermitian(rng, 6)
        a = matkit.hermitian_eig(m)
        b = matkit.hermitian_eig(m.copy())
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.eigenvectors, b.eigenvectors)

    def test_degenerate_spectrum(self):
        m = np.diag([2.0, 2.0, 1.0]).astype(complex)
        es = matkit.hermitian_eig(m)
        rec = (es.eigenvectors * es.eigenvalues) @ es.eigenvectors.conj().T
        assert np.abs(rec - m).max() <= 1e-12

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            matkit.hermitian_eig(np.zeros((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            matkit.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSplitPosNeg:
    def test_zero_matrix(self):
        plus, minus = matkit.split_pos_neg(np.zeros((3, 3)))
        assert np.all(plus == 0) and np.all(minus == 0)

    def test_diagonal_split(self):
        plus, minus = matkit.split_pos_neg(np.diag([2.0, -3.0]))
        assert np.allclose(plus, np.diag([2.0, 0.0]))
        assert np.allclose(minus, np.diag([0.0, 3.0]))

    def test_flip_channel_difference(self):
        # Choi difference of a bit flip (a=0.2) and a phase flip (b=0.4) at
        # equal mixing ratio; the three support vectors carry squared norm 2.
        from chdisguise import bit_flip, choi_from_kraus, phase_flip

        diff = (
            choi_from_kraus(bit_flip(0.2)).matrix
            - choi_from_kraus(phase_flip(0.4)).matrix
        )
        plus, minus = matkit.split_pos_neg(diff)
        wp = np.linalg.eigvalsh(plus)
        wm = np.linalg.eigvalsh(minus)
        assert np.allclose(sorted(wp[wp > 1e-12]), [0.4, 0.4])
        assert np.allclose(wm[wm > 1e-12], [0.8])

    def test_reconstruction_and_orthogonality(self, rng):
        for n in (2, 4, 6):
            m = random_hermitian(rng, n, scale=2.0)
            plus, minus = matkit.split_pos_neg(m)
            norm = matkit.spectral_norm(m)
            assert matkit.spectral_norm(plus - minus - m) <= 1e-9 * norm
            assert matkit.spectral_norm(plus @ minus) <= 1e-9 * norm**2
            assert np.linalg.eigvalsh(plus)[0] >= -1e-12 * norm
            assert np.linalg.eigvalsh(minus)[0] >= -1e-12 * norm

    def test_rejects_negative_zero_tol(self):
        with pytest.raises(ValidationError):
            matkit.split_pos_neg(np.eye(2), zero_tol=-1.0)


class TestSpectralNorm:
    def test_identity(self):
        assert matkit.spectral_norm(np.eye(4)) == pytest.approx(1.0)

    def test_small_diagonal(self):
        assert matkit.spectral_norm(np.diag([0.4, 0.4])) == pytest.approx(0.4)

    def test_matches_svd_oracle(self, rng):
        for shape in ((3, 3), (4, 2), (2, 5)):
            m = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            oracle = np.linalg.svd(m, compute_uv=False)[0]
            assert matkit.spectral_norm(m) == pytest.approx(oracle, rel=1e-10)


class TestProjectPsd:
    def test_idempotent_on_psd(self, rng):
        m = random_hermitian(rng, 4)
        psd = m @ m  # squares of Hermitian matrices are PSD
        assert np.abs(matkit.project_psd(psd) - psd).max() <= 1e-10

    def test_clips_negative_eigenvalue(self):
        out = matkit.project_psd(np.diag([1.0, -1.0]))
        assert np.allclose(out, np.diag([1.0, 0.0]))

    def test_matches_eigen_clip_oracle(self, rng):
        m = random_hermitian(rng, 5)
        w, v = np.linalg.eigh(m)
        oracle = (v * np.maximum(w, 0.0)) @ v.conj().T
        out = matkit.project_psd(m)
        assert np.abs(out - oracle).max() <= 1e-10
        assert np.linalg.eigvalsh(out)[0] >= -1e-12 * matkit.spectral_norm(m)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            matkit.project_psd(np.array([[0.0, 2.0], [0.0, 0.0]]))
