import numpy as np
import pytest

from plaplab import ConfigError, build_grid


def test_1d_dirichlet_spacing_and_mask():
    g = build_grid(1, 1.0, 11, "dirichlet")
    assert g.h == (0.1,)
    assert not g.dof_mask[0] and not g.dof_mask[10]
    assert g.dof_mask[1:10].all()


def test_1d_neumann_all_free():
    g = build_grid(1, 1.0, 11, "neumann")
    assert g.dof_mask.all() and g.n_nodes == 11


def test_2d_dirichlet_interior_count():
    g = build_grid(2, (1.0, 1.0), (5, 5), "dirichlet")
    assert g.free_count == 9


def test_rejects_bad_sizes():
    with pytest.raises(ConfigError):
        build_grid(1, 1.0, 2, "dirichlet")
    with pytest.raises(ConfigError):
        build_grid(1, -1.0, 11, "dirichlet")
    with pytest.raises(ConfigError):
        build_grid(3, 1.0, 11, "dirichlet")
    with pytest.raises(ConfigError):
        build_grid(1, 1.0, 11, "robin")


def test_node_coords_reconstructible():
    g = build_grid(2, (2.0, 3.0), (5, 7), "neumann")
    coords = g.node_coords
    # row-major: flat index = ix * ny + iy
    for flat in (0, 6, 7, 34):
        ix, iy = divmod(flat, 7)
        assert coords[flat, 0] == pytest.approx(ix * g.h[0], abs=0)
        assert coords[flat, 1] == pytest.approx(iy * g.h[1], abs=0)


def test_quad_weights_trapezoid():
    g = build_grid(1, 1.0, 11, "neumann")
    w = g.quad_weights
    assert w[0] == 0.5 and w[-1] == 0.5 and w[1:-1].sum() == 9.0
    g2 = build_grid(2, (1.0, 1.0), (5, 5), "neumann")
    # corner 1/4, edge 1/2, interior 1
    W = g2.quad_weights.reshape(5, 5)
    assert W[0, 0] == 0.25 and W[0, 2] == 0.5 and W[2, 2] == 1.0
    assert np.isclose(W.sum() * g2.h_volume, 1.0)


def test_component_labels_1d():
    g = build_grid(1, 1.0, 11, "neumann")
    mask = np.zeros(11, dtype=bool)
    mask[[1, 2, 3, 7, 8]] = True
    labels, count = g.component_labels(mask)
    assert count == 2
    assert labels[1] == labels[2] == labels[3]
    assert labels[7] == labels[8] != labels[1]
    assert labels[0] == -1


def test_component_labels_2d_diagonal_not_connected():
    g = build_grid(2, (1.0, 1.0), (4, 4), "neumann")
    mask = np.zeros(16, dtype=bool)
    mask[[0, 5]] = True  # (0,0) and (1,1): diagonal neighbors only
    _, count = g.component_labels(mask)
    assert count == 2


def test_mask_ring_and_distance():
    g = build_grid(1, 1.0, 11, "neumann")
    mask = np.zeros(11, dtype=bool)
    mask[3:8] = True
    ring = g.mask_ring(mask)
    assert set(np.flatnonzero(ring)) == {3, 7}
    dist = g.graph_distance_to(~mask)
    assert dist[5] == 3 and dist[3] == 1 and dist[0] == 0
