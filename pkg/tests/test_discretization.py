import io
import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import eigvalsh

from deltastar.discretization import (
    assemble,
    build_grid,
    form_value,
    laplacian_form,
    read_matrix,
    stiffness,
    trace_matrix,
    trace_quadrature,
    write_matrix,
)
from deltastar.geometry import DomainError, angle_config, lines_config, star_config

PI = math.pi


def dense_lowest(form, k=1):
    return eigvalsh(form.operator().toarray())[:k]


@pytest.mark.parametrize("L,h,n", [(1.0, 0.2, 9), (1.0, 0.3 * 0.8, 7), (20.0, 0.05, 799), (20.0, 0.1, 399), (10.0, 0.05, 399)])
def test_build_grid_sizes(L, h, n):
    g = build_grid(L, h)
    assert g.n == n
    assert g.size == n * n


def test_build_grid_spec_arithmetic():
    # the literal (1, 0.5) and (1, 0.3) examples violate h < L/4; the node count
    # rule itself is floor(2L/h) - 1
    assert math.floor(2 * 1 / 0.5) - 1 == 3
    assert math.floor(2 * 1 / 0.3) - 1 == 5
    assert build_grid(20.0, 0.05).size == 638401


def test_build_grid_errors():
    with pytest.raises(DomainError):
        build_grid(1.0, 0.5)
    with pytest.raises(DomainError):
        build_grid(-1.0, 0.1)
    with pytest.raises(DomainError):
        build_grid(20.0, 0.005)


def test_node_coordinates():
    g = build_grid(2.0, 0.25)
    x = g.coords()
    assert x[0] == pytest.approx(-1.75) and x[-1] == pytest.approx(1.75)
    v = g.sample(lambda x, y: x + 10 * y)
    assert v[g.index(1, 1)] == pytest.approx(-1.75 - 17.5)
    assert v[g.index(2, 1)] == pytest.approx(-1.5 - 17.5)


def _small_grid_l1():
    # bypasses the h < L/4 guard to reproduce the 3x3 hand computation
    from deltastar.discretization import Grid

    return Grid(1.0, 0.5, 3)


def test_trace_axis_ray_hand_computed():
    g = _small_grid_l1()
    q = trace_quadrature(g, 0.0)
    assert q.arclength == pytest.approx([0.25, 0.75])
    assert q.weights == pytest.approx([0.5, 0.5])
    # sample at x = 0.25 straddles nodes x = 0 and x = 0.5 on the row y = 0
    assert sorted(q.stencil_nodes[0].tolist()) == [g.index(2, 2), g.index(3, 2)]
    assert q.stencil_weights[0] == pytest.approx([0.5, 0.5])
    # sample at x = 0.75 loses its Dirichlet neighbour at x = 1
    assert q.stencil_nodes[1].tolist() == [g.index(3, 2)]
    assert q.stencil_weights[1] == pytest.approx([0.5])


def test_trace_diagonal_ray_hand_computed():
    g = _small_grid_l1()
    q = trace_quadrature(g, PI / 4)
    assert q.arclength == pytest.approx([0.25, 0.75, 1.25])
    assert q.weights == pytest.approx([0.5, 0.5, 0.5])
    # first sample at (0.177, 0.177): all four nodes of the centre cell are interior
    b = dict(zip(q.stencil_nodes[0].tolist(), q.stencil_weights[0]))
    f = 0.25 / math.sqrt(2) / 0.5
    assert b[g.index(2, 2)] == pytest.approx((1 - f) ** 2)
    assert b[g.index(3, 3)] == pytest.approx(f * f)
    assert sum(b.values()) == pytest.approx(1.0)


def _length_inside(L, angle):
    c, s = abs(math.cos(angle)), abs(math.sin(angle))
    return min(L / c if c > 1e-15 else math.inf, L / s if s > 1e-15 else math.inf)


@pytest.mark.parametrize("angle", [0.0, 0.3, PI / 4, 1.2, PI / 2, 2.5, PI, 4.0, 5.5])
def test_trace_weights_cover_ray(angle):
    g = build_grid(3.0, 0.1)
    q = trace_quadrature(g, angle)
    total = q.weights.sum()
    inside = _length_inside(g.L, angle)
    # midpoint samples are kept while their centre is inside the box
    assert abs(total - inside) <= g.h / 2 + 1e-12
    for b in q.stencil_weights:
        assert np.all((b > 0) & (b <= 1))
        assert b.sum() <= 1 + 1e-12


def test_stiffness_pattern():
    k = stiffness(5)
    assert (k - k.T).nnz == 0
    assert np.all(k.diagonal() == 4.0)
    f = np.random.default_rng(0).standard_normal(25).reshape(5, 5)
    edges = np.sum(np.diff(f, axis=0) ** 2) + np.sum(np.diff(f, axis=1) ** 2)
    # boundary edges to the zero Dirichlet layer
    edges += np.sum(f[0] ** 2 + f[-1] ** 2 + f[:, 0] ** 2 + f[:, -1] ** 2)
    assert f.ravel() @ (k @ f.ravel()) == pytest.approx(edges)


def test_trace_psd(small_angle_form):
    rng = np.random.default_rng(1)
    for t in small_angle_form.traces:
        assert abs(t - t.T).max() < 1e-15
        x = rng.standard_normal((t.shape[0], 1000))
        assert np.all(np.einsum("ij,ij->j", x, t @ x) >= -1e-12)


def test_dirichlet_ground_energy():
    form = laplacian_form(build_grid(20.0, 0.1))
    from deltastar.eigensolver import lowest_eigenpairs

    lam = lowest_eigenpairs(form, 1).eigenvalues[0]
    assert lam == pytest.approx(PI ** 2 / 800, abs=1e-4)


def test_single_node_far_from_rays(small_grid):
    form = assemble(small_grid, angle_config(PI / 3, 1.0))
    f = np.zeros(small_grid.size)
    f[small_grid.index(2, 2)] = 1.0
    assert form_value(form, f) == pytest.approx(4 / small_grid.h ** 2)


def test_constant_positive_without_coupling(small_grid):
    form = laplacian_form(small_grid)
    assert form_value(form, np.ones(small_grid.size)) > 0


def test_form_value_rejects():
    form = laplacian_form(build_grid(2.0, 0.25))
    with pytest.raises(DomainError):
        form_value(form, np.zeros(form.grid.size))
    with pytest.raises(DomainError):
        form_value(form, np.ones(3))


def test_form_value_matches_operator(small_lines_form):
    f = np.random.default_rng(3).standard_normal(small_lines_form.grid.size)
    h = small_lines_form.operator()
    assert form_value(small_lines_form, f) == pytest.approx(f @ (h @ f) / (f @ f), rel=1e-12)


def test_straight_line_profile_is_bound():
    # continuum ground profile of the straight line, times the box's longitudinal mode
    grid = build_grid(20.0, 0.05)
    form = assemble(grid, angle_config(PI, 1.0))
    f = grid.sample(lambda x, y: np.exp(-np.abs(x) / 2) * np.cos(PI * y / 40.0))
    assert form_value(form, f) <= -0.2


def test_matrix_scaling_identity():
    cfg = angle_config(1.1, 1.0)
    a = assemble(build_grid(2.0, 0.125), cfg.scaled(2.0))
    b = assemble(build_grid(4.0, 0.25), cfg)
    assert abs(a.pencil() - b.pencil()).max() == 0.0
    assert dense_lowest(a, 4) == pytest.approx(4 * dense_lowest(b, 4), rel=1e-12)


def test_reflection_symmetry(small_grid, small_angle_form):
    n = small_grid.n
    perm = np.arange(small_grid.size).reshape(n, n)[::-1].ravel()
    p = sp.identity(small_grid.size, format="csr")[perm]
    h = small_angle_form.operator()
    assert abs(p @ h - h @ p).max() < 1e-9
    w, v = np.linalg.eigh(h.toarray())
    ground = v[:, 0]
    assert w[1] - w[0] > 1e-6
    # even, not odd: the reflected vector equals the original with the same sign
    assert np.allclose(ground[perm], ground, atol=1e-8)


def test_monotone_in_coupling():
    grid = build_grid(3.0, 0.2)
    lows = [dense_lowest(assemble(grid, lines_config(1.0, a)))[0] for a in np.linspace(0.2, 3.0, 8)]
    assert np.all(np.diff(lows) <= 1e-12)
    cfg_lo = star_config([0.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    cfg_hi = star_config([0.0, 2.0, 4.0], [1.0, 1.7, 1.0])
    assert dense_lowest(assemble(grid, cfg_hi))[0] <= dense_lowest(assemble(grid, cfg_lo))[0]


def test_matrix_dump_round_trip(small_angle_form):
    buf = io.StringIO()
    write_matrix(small_angle_form, buf)
    text = buf.getvalue()
    head = text.splitlines()[0].split()
    assert int(head[0]) == small_angle_form.grid.size
    assert float(head[2]) == small_angle_form.h
    assert float(head[3]) == small_angle_form.grid.L
    rows = [tuple(map(float, line.split())) for line in text.splitlines()[1:3]]
    assert all(r >= c for r, c, _ in rows)
    m, h, L = read_matrix(io.StringIO(text))
    assert abs(m - small_angle_form.pencil()).max() == 0.0
    assert (h, L) == (small_angle_form.h, small_angle_form.grid.L)


def test_empty_trace_is_laplacian():
    grid = build_grid(2.0, 0.25)
    form = assemble(grid, angle_config(PI, 1.0))
    # rays leaving the box at once are impossible from the centre; an empty
    # quadrature still assembles to a zero matrix
    from deltastar.discretization import TraceQuadrature

    empty = TraceQuadrature(0, np.array([]), np.array([]), (), ())
    assert trace_matrix(grid, empty).nnz == 0
    assert form.K.shape == (grid.size, grid.size)
