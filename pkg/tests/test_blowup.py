from fractions import Fraction

import numpy as np
import pytest

from gasketlab.blowup import BlowupCloud, blowup_cloud, density_grid
from gasketlab.energy import default_basis
from gasketlab.errors import DegenerateBasisError, InvalidParameterError
from gasketlab.gasket import GasketSpec


@pytest.fixture(scope="module")
def sg():
    return GasketSpec(2, [2])


@pytest.fixture(scope="module")
def cloud(sg):
    basis = default_basis(2)
    return blowup_cloud(sg, (), basis.raw[0], basis.raw[1], m=3, K=0, mode="exact")


def test_cloud_exact_mass_conservation(cloud):
    assert isinstance(cloud.total_mass, Fraction)
    recomputed = sum(e * e * mass for e, mass in zip(cloud.e_means, cloud.masses))
    assert recomputed == cloud.total_mass
    assert all(w >= 0 for w in cloud.weights)
    assert cloud.n_points == 27


def test_cloud_points_inside_unit_disk(cloud):
    norms = np.linalg.norm(cloud.points, axis=1)
    assert norms.max() <= 1.0 + 1e-12


def test_cloud_alpha_normalizes_vertex_values(sg):
    # the maximum vertex norm of the rescaled pair is exactly 1
    basis = default_basis(2)
    from gasketlab.exactla import mat_vec
    from gasketlab.harmonic import extension_matrices

    cloud = blowup_cloud(sg, (), basis.raw[0], basis.raw[1], m=2, K=0, mode="exact")
    data = extension_matrices(2, 2)
    best = 0.0
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            v1 = mat_vec(data.A[j - 1], mat_vec(data.A[i - 1], basis.raw[0]))
            v2 = mat_vec(data.A[j - 1], mat_vec(data.A[i - 1], basis.raw[1]))
            for k in range(3):
                best = max(best, cloud.alpha**2 * float(v1[k] * v1[k] + v2[k] * v2[k]))
    assert best == pytest.approx(1.0, abs=1e-12)


def test_cloud_rejects_degenerate_pair(sg):
    with pytest.raises(DegenerateBasisError):
        blowup_cloud(sg, (), [1, 0, 0], [2, 1, 1], m=2)  # second = first + const


def test_grid_conservation_and_refinement(cloud):
    g64 = density_grid(cloud, 64)
    g128 = density_grid(cloud, 128)
    total = float(cloud.total_mass)
    assert abs(g64.sum() - total) <= 1e-12 * total
    assert abs(g128.sum() - total) <= 1e-12 * total
    blocks = g128.reshape(64, 2, 64, 2).sum(axis=(1, 3))
    assert np.abs(blocks - g64).max() <= 1e-12


def test_grid_empty_cloud_and_resolution_floor(cloud):
    empty = BlowupCloud(
        word=(),
        depth=0,
        inner_depth=1,
        refinement=0,
        alpha=1.0,
        points=np.zeros((0, 2)),
        weights=[],
        masses=[],
        e_means=[],
        total_mass=Fraction(0),
    )
    assert density_grid(empty, 16).sum() == 0.0
    with pytest.raises(InvalidParameterError):
        density_grid(cloud, 4)


def test_mass_concentrates_where_equilibrium_potential_is_high(sg):
    # frozen qualitative threshold: >= 90% of the mass sits on subcells with
    # e > 1/2 at depth 8 (the oracle run gives ~0.99)
    basis = default_basis(2)
    cloud = blowup_cloud(sg, (), basis.raw[0], basis.raw[1], m=8, K=0, mode="float")
    total = float(cloud.total_mass)
    high = sum(float(w) for w, e in zip(cloud.weights, cloud.e_means) if float(e) > 0.5)
    assert high / total >= 0.90
