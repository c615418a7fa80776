import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from graphequiv.models import (
    CAP, EXP_LINK, ODDS, CustomKernel, GridEnsemble, IIDEnsemble, MaxInverse, ModelError,
    ModelFamily, RankOne, SqrtInverse, Tabulated, classify_tail, custom_link, grid_cubic_partial_sums,
    load_tabulated_kernel, pair_models, realize, tail_profile, truncated_third_moment,
)
from graphequiv.specs import preset


def brute_grid_cubes(kernel, n):
    total = 0.0
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            total += float(kernel(i / n, j / n, n)) ** 3 / n ** 3
    return total


def test_edet_small_instance():
    pair = pair_models(ModelFamily(MaxInverse(), GridEnsemble()), CAP, ODDS, 3)
    assert_allclose(pair.left, [1 / 2, 1 / 3, 1 / 3], rtol=1e-15)
    assert_allclose(pair.right, [1 / 3, 1 / 4, 1 / 4], rtol=1e-15)


def test_links():
    x = np.array([0.0, 0.5, 2.0])
    assert_allclose(CAP(x), [0, 0.5, 1])
    assert_allclose(EXP_LINK(x), 1 - np.exp(-x))
    assert_allclose(ODDS(x), x / (1 + x))


def test_custom_link_checks():
    link = custom_link(lambda x: np.tanh(x), "tanh")
    assert link(0.3) == pytest.approx(math.tanh(0.3))
    with pytest.raises(ModelError):
        custom_link(lambda x: x + 0.1, "shifted")
    with pytest.raises(ModelError):
        custom_link(lambda x: 2 * x, "steep")    # leaves [0, 1]
    with pytest.raises(ModelError):
        custom_link(lambda x: np.minimum(np.sqrt(x), 1), "sqrt")   # not x + O(x^2)


def test_max_inverse_saturation():
    assert MaxInverse(1.0, 0.0).saturates is False
    assert MaxInverse(3.0, 0.0).saturates is True
    assert MaxInverse(3.0, 1.5).saturates is False
    with pytest.raises(ModelError):
        preset("edet", c=3.0)


def test_kernel_validation():
    with pytest.raises(ModelError):
        MaxInverse(c=0)
    with pytest.raises(ModelError):
        Tabulated([[1, 2], [3, 1]])
    with pytest.raises(ModelError):
        Tabulated([[1, -1], [-1, 1]])
    with pytest.raises(ModelError):
        CustomKernel(lambda x, y: x * (y + 1))


def test_tabulated_csv(tmp_path):
    f = tmp_path / "k.csv"
    f.write_text("a,b\n1,2\n2,0.5\n")
    k = load_tabulated_kernel(f)
    assert k(np.array([0, 1]), np.array([1, 1])).tolist() == [2.0, 0.5]
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2\n2,1\n")
    with pytest.raises(ModelError):
        load_tabulated_kernel(bad)


def test_realize_shape_range_and_seed():
    model = preset("erank1").model
    a = realize(model, 50, seed=3)
    b = realize(model, 50, seed=3)
    assert a.shape == (50 * 49 // 2,)
    assert np.all((a >= 0) & (a <= 1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, realize(model, 50, seed=4))
    with pytest.raises(ModelError):
        realize(model, 50)


def test_pair_models_share_the_draw():
    model = preset("erank1").model
    pair = pair_models(model, EXP_LINK, ODDS, 40, seed=1)
    p0 = model.base_intensity(40, np.random.default_rng(1))
    assert_allclose(pair.left, EXP_LINK(p0))
    assert_allclose(pair.right, ODDS(p0))


def test_weights_model_matches_formula():
    model = preset("ehh").model
    rng_seed = 12
    L = model.ensemble.sample(6, np.random.default_rng(rng_seed))
    p0 = model.base_intensity(6, np.random.default_rng(rng_seed))
    i, j = np.triu_indices(6, 1)
    assert_allclose(p0, L[i] * L[j] / L.sum())


@pytest.mark.parametrize("kernel", [MaxInverse(1.0), MaxInverse(1.0, 0.5), SqrtInverse(1.0)])
def test_cubic_partial_sums_fast_path_matches_brute_force(kernel):
    grid = [2, 5, 17, 40]
    fast = grid_cubic_partial_sums(kernel, grid)
    assert_allclose(fast, [brute_grid_cubes(kernel, n) for n in grid], rtol=1e-12)


def test_cubic_partial_sums_generic_path():
    k = CustomKernel(lambda x, y: 1.0 / np.maximum(x, y))
    assert_allclose(grid_cubic_partial_sums(k, [5, 20]),
                    grid_cubic_partial_sums(MaxInverse(1.0), [5, 20]), rtol=1e-12)


def test_edet_cubic_sum_closed_form():
    # sum_j (j-1)/j^3 = zeta(2) - zeta(3)
    limit = math.pi ** 2 / 6 - special.zeta(3)
    s = grid_cubic_partial_sums(MaxInverse(1.0), [10**6])[0]
    assert s == pytest.approx(limit, abs=1e-6)
    assert abs(s - (math.pi ** 2 / 6 - 1)) > 0.2


def test_edet2_cubic_sum_closed_form():
    # sum_{i<j} (ij)^(-3/2) = (zeta(3/2)^2 - zeta(3)) / 2, with a tail of about 2 zeta(3/2)/sqrt(n)
    limit = 0.5 * (special.zeta(1.5) ** 2 - special.zeta(3))
    n = 10**6
    s = grid_cubic_partial_sums(SqrtInverse(1.0), [n])[0]
    assert s + 2 * special.zeta(1.5) / math.sqrt(n) == pytest.approx(limit, abs=1e-4)


def test_truncated_third_moment_edet():
    model = ModelFamily(MaxInverse(1.0), GridEnsemble())
    value, over = truncated_third_moment(model, 2000)
    assert over == 0
    assert value == pytest.approx(grid_cubic_partial_sums(MaxInverse(1.0), [2000])[0], rel=1e-12)
    assert value == pytest.approx(math.pi ** 2 / 6 - special.zeta(3), abs=1e-3)


def test_classify_tail():
    t = np.logspace(0, 3, 10)
    assert classify_tail(t, t ** -3.0).classification == "o"
    assert classify_tail(t, t ** -2.0).classification == "O"
    assert classify_tail(t, t ** -1.0).classification == "neither"
    assert classify_tail(t, np.where(t < 10, 0.1, 0.0)).classification == "o"
    assert classify_tail(t[:2], t[:2] ** -2.0).classification == "inconclusive"


def test_tail_profile_exact_and_monte_carlo():
    model = preset("erank1", alpha=3.0).model
    t = np.logspace(0.2, 2, 8)
    exact = tail_profile(model, t)
    assert exact.method == "exact" and exact.classification == "o"
    assert_allclose(exact.tail, t ** -3.0)
    mc = tail_profile(model, t, target="kernel", seed=2)
    assert mc.method == "monte_carlo"
    with pytest.raises(ModelError):
        tail_profile(ModelFamily(MaxInverse(), GridEnsemble()), t)


def test_tail_profile_tabulated_atoms():
    k = Tabulated([[1.0, 5.0], [5.0, 50.0]])
    ens = IIDEnsemble(lambda rng, n: rng.choice(2, n, p=[0.9, 0.1]).astype(float), "cat",
                      atoms=(0.9, 0.1))
    prof = tail_profile(ModelFamily(k, ens), [0.5, 2.0, 10.0, 100.0])
    assert_allclose(prof.tail, [1.0, 0.19, 0.01, 0.0])
    assert prof.classification == "o"


def _broken_psi(x):
    raise RuntimeError("boom")


def test_kernel_errors_are_wrapped():
    bad = ModelFamily(RankOne(_broken_psi, "bad"),
                      IIDEnsemble(lambda rng, n: rng.random(n), "u"))
    with pytest.raises(ModelError):
        realize(bad, 10, seed=0)


def test_swapped_links_give_swapped_pair():
    model = preset("erank1").model
    a = pair_models(model, EXP_LINK, ODDS, 30, seed=5)
    b = pair_models(model, ODDS, EXP_LINK, 30, seed=5)
    assert np.array_equal(a.left, b.right) and np.array_equal(a.right, b.left)
