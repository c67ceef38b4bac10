import numpy as np
import pytest

from dlselect.conditions import check_psd
from dlselect.designs import (
    KINDS,
    DesignSpec,
    generate_replication,
    make_covariance,
    sample_mvn,
    true_beta,
)
from dlselect.errors import InvalidSpec, NotPSD


def test_identity_and_block_entries():
    np.testing.assert_array_equal(make_covariance(DesignSpec("identity", p=3, s=1)), np.eye(3))
    C = make_covariance(DesignSpec("block_diagonal", p=500, rho=0.9, block_size=10))
    assert C[0, 1] == 0.9 and C[0, 10] == 0.0
    assert (np.diag(C) == 1).all()


def test_toeplitz_entry():
    C = make_covariance(DesignSpec("toeplitz", p=4, rho=0.9, s=2))
    assert C[0, 3] == pytest.approx(0.729, abs=1e-15)


def test_single_block_noise_layout():
    C = make_covariance(DesignSpec("single_block_noise", p=30, rho=0.5, block_size=20))
    assert C[0, 19] == 0.5 and C[0, 20] == 0.0 and C[25, 26] == 0.0


@pytest.mark.parametrize("kind", KINDS)
def test_every_covariance_is_symmetric_unit_diagonal_psd(kind):
    C = make_covariance(DesignSpec(kind, p=40, rho=0.7, block_size=10))
    np.testing.assert_array_equal(C, C.T)
    assert (np.diag(C) == 1).all()
    assert check_psd(C).holds


def test_block_eigenvalues():
    rho, b = 0.9, 10
    w = np.linalg.eigvalsh(make_covariance(DesignSpec("block_diagonal", p=50, rho=rho, block_size=b)))
    targets = np.array([1 - rho, 1 + (b - 1) * rho])
    assert np.abs(w[:, None] - targets).min(axis=1).max() < 1e-10


def test_true_beta_shapes():
    beta, S = true_beta(DesignSpec("identity", p=500, s=20))
    assert (beta[:20] == 1).all() and not beta[20:].any() and len(S) == 20
    beta, S = true_beta(DesignSpec("single_block", p=20, s=20, rho=0.99))
    assert (beta == 1).all()
    beta, S = true_beta(DesignSpec("identity", p=5, s=0))
    assert not beta.any() and len(S) == 0


def test_sampler_moments_and_determinism():
    X = sample_mvn(np.eye(3), 5000, 11)
    assert np.abs(np.cov(X, rowvar=False) - np.eye(3)).max() < 0.1
    np.testing.assert_array_equal(X, sample_mvn(np.eye(3), 5000, 11))
    C = make_covariance(DesignSpec("single_block", p=20, rho=0.99))
    Z = sample_mvn(C, 5000, 3)
    assert np.corrcoef(Z[:, 0], Z[:, 1])[0, 1] >= 0.95


def test_sampler_rejects_indefinite():
    with pytest.raises(NotPSD):
        sample_mvn(np.array([[1.0, 2.0], [2.0, 1.0]]), 10, 0)


def test_replications_share_design_but_not_noise():
    spec = DesignSpec("block_diagonal", p=20, rho=0.5, block_size=10, n_train=30, n_val=30,
                      n_test=50, s=5, design_seed=4)
    a, b = generate_replication(spec, 0), generate_replication(spec, 1)
    np.testing.assert_array_equal(a.train.X, b.train.X)
    assert not np.array_equal(a.train.Y, b.train.Y)
    again = generate_replication(spec, 1)
    for split in ("train", "val", "test"):
        assert again.split(split).X.tobytes() == b.split(split).X.tobytes()
        assert again.split(split).Y.tobytes() == b.split(split).Y.tobytes()


def test_noiseless_mode():
    spec = DesignSpec("toeplitz", p=10, rho=0.5, n_train=20, n_val=20, n_test=20, s=3, sigma=0.0)
    d = generate_replication(spec, 0)
    # every split uses the training record, so one standardized-scale beta fits all
    beta_std = d.beta * d.train.std_record.x_scale
    for split in ("train", "val", "test"):
        ds = d.split(split)
        np.testing.assert_allclose(ds.Y, ds.X @ beta_std, atol=1e-10)


def test_desk_scale_shapes():
    spec = DesignSpec("block_diagonal", p=100, rho=0.9, block_size=10, n_train=200, n_val=200, n_test=1000)
    d = generate_replication(spec, 0)
    assert d.train.X.shape == (200, 100) and d.val.X.shape == (200, 100) and d.test.X.shape == (1000, 100)


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        DesignSpec("block_diagonal", p=25, block_size=10)
    with pytest.raises(InvalidSpec):
        DesignSpec("identity", p=5, rho=1.0)
    with pytest.raises(InvalidSpec):
        DesignSpec("nope", p=5)
    assert DesignSpec("block_diagonal", p=100).num_blocks == 10
