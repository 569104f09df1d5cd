import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from _oracles import gaussian_overlap_4pi
from torsion_wigner.errors import CoverageError, GridMismatchError, InvalidStateError
from torsion_wigner.fock_oracle import build_state, wigner_reconstruct
from torsion_wigner.phase_space import (
    GaussianState,
    GridWigner,
    cat_axes,
    default_axes,
    dumps_json,
    fidelity_overlap,
    gaussian_to_grid,
    load_grid,
    make_coherent,
    make_even_cat,
    make_fock_wigner,
    make_squeezed,
    make_squeezed_thermal,
    make_vacuum,
    negativity_volume,
    purity,
    save_grid,
    symmetric_axis,
)


def _abs_fock1_integral():
    # radial 1D quadrature of |W_1| with u = r^2
    f = lambda u: 0.5 * abs(u - 1.0) * math.exp(-0.5 * u)  # noqa: E731
    return quad(f, 0, 1)[0] + quad(f, 1, np.inf)[0]


def test_vacuum_examples(small_axes):
    v = make_vacuum()
    assert v.evaluate(0.0, 0.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert v.cov[0, 0] == 1.0
    g = gaussian_to_grid(v, *small_axes)
    assert purity(g) == pytest.approx(1.0, abs=1e-6)


def test_squeezed_examples():
    assert np.array_equal(make_squeezed(0.0).cov, make_vacuum().cov)
    s = make_squeezed(1.15)
    assert s.cov[0, 0] == pytest.approx(9.974, abs=1e-3)
    assert s.cov[1, 1] == pytest.approx(0.10026, abs=1e-5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3))
def test_squeezed_is_pure(r):
    assert np.linalg.det(make_squeezed(r).cov) == pytest.approx(1.0, abs=1e-12)


def test_squeezed_thermal_examples():
    assert np.array_equal(make_squeezed_thermal(0.2, 2000).cov, np.diag([0.2, 2000.0]))
    assert np.array_equal(make_squeezed_thermal(1, 1).cov, np.eye(2))
    with pytest.raises(InvalidStateError):
        make_squeezed_thermal(0.1, 5)


def test_uncertainty_guard_on_general_gaussian():
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(2), np.array([[0.5, 0.0], [0.0, 1.5]]))


def test_even_cat_examples():
    c = make_even_cat(2.0)
    assert c.function(0.0, 0.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    X, P = np.meshgrid(c.x_axis, c.p_axis, indexing="ij")
    vac = make_vacuum().evaluate(X, P)
    assert np.max(np.abs(make_even_cat(0.0, c.x_axis, c.p_axis).values - vac)) < 1e-12
    zero = np.argmin(np.abs(c.x_axis))
    assert c.values[zero, :].min() < 0


def test_even_cat_matches_oracle():
    ax = symmetric_axis(12, 241)
    ref = wigner_reconstruct(build_state("even_cat", 40, 2.0), ax, ax)
    assert np.max(np.abs(make_even_cat(2.0, ax, ax).values - ref.values)) < 1e-6


@pytest.mark.parametrize("n", range(5))
def test_fock_matches_oracle(n, small_axes):
    ref = wigner_reconstruct(build_state("fock", 40, n), *small_axes)
    limit = 1e-8 if n == 2 else 1e-6
    assert np.max(np.abs(make_fock_wigner(n, *small_axes).values - ref.values)) < limit


def test_fock_examples():
    f0 = make_fock_wigner(0)
    X, P = np.meshgrid(f0.x_axis, f0.p_axis, indexing="ij")
    assert np.max(np.abs(f0.values - make_vacuum().evaluate(X, P))) < 1e-15
    assert make_fock_wigner(1).function(0.0, 0.0) == pytest.approx(-1 / (2 * math.pi), rel=1e-15)


def test_default_constructors_normalized():
    for w in (make_fock_wigner(3), make_even_cat(3.0), gaussian_to_grid(make_squeezed(0.6))):
        assert w.normalized
        assert w.total() == pytest.approx(1.0, abs=1e-6)
    assert cat_axes(3.0)[0][-1] == 14.0


def test_gaussian_to_grid_examples():
    x, p = symmetric_axis(8, 201), symmetric_axis(8, 201)
    assert gaussian_to_grid(make_vacuum(), x, p).total() == pytest.approx(1.0, abs=1e-6)
    s = gaussian_to_grid(make_squeezed(1.15), symmetric_axis(20, 801), symmetric_axis(20, 801))
    _, _, var_x, var_p, _ = s.moments()
    assert var_x == pytest.approx(math.exp(2.3), abs=1e-4)
    assert var_p == pytest.approx(math.exp(-2.3), abs=1e-4)
    c = gaussian_to_grid(make_coherent(3.0, -2.0), *default_axes())
    i, j = np.unravel_index(np.argmax(c.values), c.values.shape)
    assert (c.x_axis[i], c.p_axis[j]) == (pytest.approx(3.0), pytest.approx(-2.0))
    with pytest.raises(CoverageError):
        gaussian_to_grid(make_squeezed(1.15), symmetric_axis(8, 101), symmetric_axis(8, 101))


def test_negativity_examples():
    assert negativity_volume(make_fock_wigner(0)) < 1e-9
    assert negativity_volume(gaussian_to_grid(make_squeezed(0.7))) < 1e-9
    expected = _abs_fock1_integral() - 1.0
    assert expected == pytest.approx(4 * math.exp(-0.5) - 2, abs=1e-12)
    ax = symmetric_axis(8, 401)
    assert negativity_volume(make_fock_wigner(1, ax, ax)) == pytest.approx(expected, abs=1e-3)
    raw = GridWigner(ax, ax, make_fock_wigner(1, ax, ax).values * 2, normalized=False)
    with pytest.raises(InvalidStateError):
        negativity_volume(raw)


def test_overlap_examples(axes):
    vac = gaussian_to_grid(make_vacuum(), *axes)
    assert fidelity_overlap(vac, vac) == pytest.approx(1.0, abs=1e-6)
    assert fidelity_overlap(vac, make_fock_wigner(1, *axes)) == pytest.approx(0.0, abs=1e-6)
    coh = gaussian_to_grid(make_coherent(2.0, 0.0), *axes)
    expected = gaussian_overlap_4pi([0, 0], np.eye(2), [2, 0], np.eye(2))
    assert expected == pytest.approx(math.exp(-1), rel=1e-14)
    assert fidelity_overlap(vac, coh) == pytest.approx(expected, abs=1e-3)
    # oracle trace of the same pair
    rho_v = build_state("vacuum", 40).rho
    rho_c = build_state("coherent", 40, 1.0).rho
    assert np.trace(rho_v @ rho_c).real == pytest.approx(expected, abs=1e-10)
    with pytest.raises(GridMismatchError):
        fidelity_overlap(vac, make_fock_wigner(1, symmetric_axis(8, 101), symmetric_axis(8, 101)))


@pytest.mark.parametrize("maker", [lambda: make_fock_wigner(3), lambda: make_even_cat(2.5)])
def test_marginals_nonnegative(maker):
    w = maker()
    assert w.marginal_x().min() >= -1e-9
    assert w.marginal_p().min() >= -1e-9


def test_save_load_roundtrip(tmp_path):
    w = make_even_cat(1.5)
    csv, side = save_grid(w, tmp_path / "cat.csv", {"tag": 1})
    back, meta = load_grid(csv)
    assert np.array_equal(back.values, w.values)
    assert np.array_equal(back.x_axis, w.x_axis) and back.normalized
    assert meta["tag"] == 1
    assert csv.read_text().splitlines()[0] == "x,p,W"
    assert json.loads(side.read_text())["x_points"] == w.x_axis.size


def test_dumps_json_format():
    text = dumps_json({"b": 0.1, "a": [1.0, np.float64(2.5e-20), float("nan")], "n": 3})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "1.0," in text and "null" in text
    assert json.loads(text)["n"] == 3
