import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from conftest import clean_training_set
from hiq.colorrec import (
    TrainConfig,
    augment_noisy_white,
    collect_samples,
    estimate_white,
    normalize_white,
    train,
    train_lsvm,
    train_lsvm_cmi,
    train_qda,
    train_qda_cmi,
)
from hiq.colorrec.lsvm import (
    hinge_subgradient,
    lagrangian_theta_cost,
    project_ball,
    simplex_vertices,
    theta_descent,
    vertex_witness,
)
from hiq.colorrec.model_io import dumps, load_model, loads, save_model
from hiq.colorrec.qda import _gaussians, _mix, theta_update
from hiq.colorrec.svm import CubicForm, feature_jacobian, feature_map, primal_objective, solve_svm
from hiq.errors import InsufficientData, InvalidParameter, InvalidWhite
from hiq.geometry import neighbor_stack
from hiq.raster import CorpusSpec, apply_illumination, cmi_grid, render, synth_corpus
from hiq.symbology import encode


def cmi_training_set(n_layers, alpha=(0.6, 0.1, 0.1, 0.1, 0.1), noise=0.03, version=5, seed=0):
    """Module-level (X, y) with cross-module interference and noise, no rendering."""
    sym = encode(b"cmi", n_layers, None, version, seed=seed)
    mixed = cmi_grid(sym.module_colors(), alpha)
    rng = np.random.default_rng(seed)
    mixed = np.clip(mixed + rng.normal(0, noise, mixed.shape), 0, 2)
    keep = ~sym.pattern_mask().ravel()
    return neighbor_stack(mixed).reshape(-1, 5, 3)[keep], sym.classes().ravel()[keep]


# --- white -----------------------------------------------------------------------

def test_normalize_white_clamps_and_validates():
    out = normalize_white(np.array([[0.5, 1.0, 0.9]]), (0.5, 0.5, 0.3))
    assert np.allclose(out, [[1.0, 2.0, 2.0]])
    with pytest.raises(InvalidWhite):
        normalize_white(np.ones(3), (1.0, 0.0, 1.0))


@pytest.mark.parametrize("gains", [(1.0, 1.0, 1.0), (0.9, 0.75, 0.55), (0.6, 0.6, 0.65)])
def test_estimate_white_recovers_light_color(gains):
    sym = encode(b"white", 3, None, 4)
    img = apply_illumination(render(sym), gains)
    W = estimate_white(img, np.linalg.inv(img.homography), sym.dim)
    assert np.abs(W - gains).max() < 0.02


def test_noisy_white_augmentation():
    raw = np.full((10, 5, 3), 0.4)
    X, y = augment_noisy_white(raw, np.arange(10), (0.8, 0.8, 0.8), count=5, sigma_w=0.03, seed=1)
    assert X.shape == (60, 5, 3) and list(y[:10]) == list(range(10)) and list(y[50:]) == list(range(10))
    assert np.allclose(X[:10], 0.5)
    copies = X[10:]
    # each copy normalizes all five rows of a sample by the same noisy white
    assert np.allclose(copies, copies[:, :1])
    assert 0.005 < np.std(copies[:, 0] / 0.5 - 1) < 0.06
    with pytest.raises(InvalidWhite):
        augment_noisy_white(raw, np.arange(10), (0.8, 0.8, 0.8), sigma_w=0.0)


def test_collect_samples_from_corpus():
    items = synth_corpus(CorpusSpec(versions=(2,), n_layers=2), 2, seed=3)
    X, y = collect_samples(items, augment_count=2, per_image=100, seed=0)
    assert X.shape == (600, 5, 3) and y.shape == (600,)
    assert set(np.unique(y)) <= {0, 1, 2, 3}


# --- QDA -------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_qda_separates_clean_colors(n):
    X, y = clean_training_set(n)
    model = train_qda(X, y, n)
    assert (model.predict_classes(X) == y).mean() > 0.999
    k, bits = model.predict(X[0])
    assert k == y[0] and bits == tuple((y[0] >> (n - 1 - i)) & 1 for i in range(n))


def test_qda_counts_class_evaluations():
    X, y = clean_training_set(2)
    model = train_qda(X, y, 2)
    model.evaluations = 0
    model.predict_bits(X[:100])
    assert model.evaluations == 100 * 4


def test_qda_needs_every_class():
    X, y = clean_training_set(2)
    with pytest.raises(InsufficientData):
        train_qda(X[y != 3], y[y != 3], 2)


def test_qda_cmi_log_likelihood_never_decreases():
    X, y = cmi_training_set(2)
    model = train_qda_cmi(X, y, 2, TrainConfig(max_iters=30, tol=1e-9))
    h = np.array(model.history)
    assert (np.diff(h) >= -1e-6 * np.abs(h[1:])).all()
    assert h[-1] > h[0]
    assert model.theta.sum() == pytest.approx(1)
    assert model.theta[0] > 0.5


def test_qda_cmi_beats_qda_under_interference():
    alpha = (0.6, 0.1, 0.1, 0.1, 0.1)
    X, y = cmi_training_set(3, alpha=alpha, noise=0.03)
    Xt, yt = cmi_training_set(3, alpha=alpha, noise=0.03, version=6, seed=1)
    plain = (train_qda(X, y, 3).predict_classes(Xt) != yt).mean()
    model = train_qda_cmi(X, y, 3)
    cmi = (model.predict_classes(Xt) != yt).mean()
    assert cmi < plain
    assert (model.theta[1:] < 0).all()  # learned theta undoes the neighbor leakage


def test_theta_update_matches_constrained_optimizer():
    """Closed-form theta equals a numerical constrained minimizer of the Mahalanobis sum."""
    X, y = cmi_training_set(2, noise=0.05)
    X, y = X[:600], y[:600]
    means, covs = _gaussians(_mix(X, np.array([0.8, 0.05, 0.05, 0.05, 0.05])), y, 4, 1e-6)
    precs = np.linalg.inv(covs)

    def cost(theta):
        d = _mix(X, theta) - means[y]
        return np.einsum("ia,iab,ib->", d, precs[y], d)

    ref = minimize(cost, np.full(5, 0.2), constraints=[{"type": "eq", "fun": lambda t: t.sum() - 1}],
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 500}).x
    closed = theta_update(X, y, means, covs, "sum")
    assert np.allclose(closed, ref, atol=1e-4)
    free = theta_update(X, y, means, covs, "none")
    ref_free = minimize(cost, np.full(5, 0.2), method="BFGS", options={"gtol": 1e-10}).x
    assert np.allclose(free, ref_free, atol=1e-4)


# --- SVM -------------------------------------------------------------------------

def test_dual_solver_reaches_primal_optimum():
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(40, 3))
    y = (Z @ [1.0, -0.5, 0.3] + 0.2 * rng.normal(size=40) > 0).astype(float)
    C = 1.0
    sol = solve_svm(Z, y, C, tol=1e-6, max_epochs=10_000)
    s = 2 * y - 1

    def obj(v):
        w, b, xi = v[:3], v[3], v[4:]
        return 0.5 * (w @ w + b * b) + C * xi.sum()

    cons = [{"type": "ineq", "fun": lambda v: s * (Z @ v[:3] + v[3]) - 1 + v[4:]},
            {"type": "ineq", "fun": lambda v: v[4:]}]
    ref = minimize(obj, np.zeros(44), constraints=cons, method="SLSQP", options={"maxiter": 1000, "ftol": 1e-12})
    assert primal_objective(Z, y, sol.w, sol.b, C) == pytest.approx(ref.fun, rel=1e-4)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_poly3_features_reproduce_the_kernel(v):
    x, z = np.array(v[:3]), np.array(v[3:])
    assert feature_map("poly3", x) @ feature_map("poly3", z) == pytest.approx((x @ z + 1) ** 3, abs=1e-9)


def test_feature_jacobian_matches_finite_differences():
    x = np.array([0.3, 0.7, 0.2])
    jac = feature_jacobian("poly3", x)
    h = 1e-6
    for c in range(3):
        e = np.zeros(3)
        e[c] = h
        fd = (feature_map("poly3", x + e) - feature_map("poly3", x - e)) / (2 * h)
        assert np.allclose(jac[:, c], fd, atol=1e-6)


@pytest.mark.parametrize("kernel", ["linear", "poly3"])
def test_cubic_form_equals_weighted_features(kernel):
    rng = np.random.default_rng(4)
    w = rng.normal(size=feature_map(kernel, np.zeros(3)).shape[-1])
    form = CubicForm.from_weights(kernel, w, 0.3)
    x = rng.uniform(0, 1, (20, 3))
    val, grad = form.value_and_grad(x)
    assert np.allclose(val, feature_map(kernel, x) @ w + 0.3)
    assert np.allclose(grad, np.einsum("ndc,d->nc", feature_jacobian(kernel, x), w))


@pytest.mark.parametrize("kernel", ["linear", "poly3"])
def test_hinge_subgradient_matches_finite_differences(kernel):
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 1, (50, 5, 3))
    s = rng.choice([-1.0, 1.0], 50)
    w = rng.normal(size=feature_map(kernel, np.zeros(3)).shape[-1])
    form = CubicForm.from_weights(kernel, w, 0.1)
    theta = np.array([0.7, 0.1, 0.05, 0.1, 0.05])
    val, grad = hinge_subgradient(X, s, form, theta)
    xh = _mix(X, theta)
    assert val == pytest.approx(np.maximum(0, 1 - s * form.value(xh)).sum())
    h = 1e-7
    for r in range(5):
        e = np.zeros(5)
        e[r] = h
        fd = (hinge_subgradient(X, s, form, theta + e)[0] - hinge_subgradient(X, s, form, theta - e)[0]) / (2 * h)
        assert grad[r] == pytest.approx(fd, rel=1e-4, abs=1e-5)


def test_theta_descent_stays_in_the_ball_and_does_not_increase():
    rng = np.random.default_rng(6)
    X = rng.uniform(0, 1, (80, 5, 3))
    s = rng.choice([-1.0, 1.0], 80)
    form = CubicForm.from_weights("linear", np.array([2.0, -1.0, 0.5]), -0.3)
    theta0 = np.array([1.0, 0, 0, 0, 0])
    theta, val = theta_descent(X, s, form, theta0, 100, 0.1)
    assert np.linalg.norm(theta) <= 1 + 1e-12
    assert val <= hinge_subgradient(X, s, form, theta0)[0]
    assert np.linalg.norm(project_ball(np.array([3.0, 4, 0, 0, 0]))) == pytest.approx(1)


def test_lsvm_layers_are_independent_and_accurate():
    X, y = clean_training_set(2)
    model = train_lsvm(X, y, 2)
    bits = model.predict_bits(X)
    truth = np.stack([(y >> 1) & 1, y & 1])
    assert (bits == truth).mean() > 0.999
    model.evaluations = 0
    skipped = model.predict_bits(X[:10], skip_layers=(0,))
    assert model.evaluations == 10 and not skipped[0].any()


def test_lsvm_cmi_objective_never_increases():
    X, y = cmi_training_set(1, noise=0.05)
    model = train_lsvm_cmi(X, y, 1, TrainConfig(max_iters=8, inner_steps=50))
    h = np.array(model.layers[0].history)
    assert (np.diff(h) <= 1e-9).all()
    assert np.linalg.norm(model.layers[0].theta) <= 1 + 1e-12


def test_lsvm_needs_both_classes_per_layer():
    X, y = clean_training_set(2)
    with pytest.raises(InsufficientData):
        train_lsvm(X[y < 2], y[y < 2], 2)


def test_simplex_vertex_witness_agrees_with_lp():
    verts = simplex_vertices(5)
    assert np.array_equal(verts, np.eye(5))
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 1, (30, 5, 3))
    bits = rng.integers(0, 2, 30)
    lam = rng.uniform(0, 1, 30)
    w = rng.normal(size=3)
    out = vertex_witness(X, bits, w, 0.0, lam)
    assert out["value_vertex"] == pytest.approx(out["value_lp"], abs=1e-9)
    c = lagrangian_theta_cost(X, bits, w, 0.0, lam)
    assert out["value_vertex"] == pytest.approx(c.min())


# --- dispatch and files ----------------------------------------------------------

def test_train_dispatch_and_config():
    X, y = clean_training_set(1)
    assert train("qda", X, y, 1).kind == "qda"
    assert train("lsvm", X, y, 1).kind == "lsvm"
    with pytest.raises(ValueError):
        train("knn", X, y, 1)
    cfg = TrainConfig()
    assert [cfg.kernel_for(j) for j in range(4)] == ["linear", "linear", "poly3", "poly3"]


@pytest.mark.parametrize("method", ["qda", "qda-cmi", "lsvm", "lsvm-cmi"])
def test_model_files_round_trip_exactly(tmp_path, method):
    X, y = cmi_training_set(3, noise=0.05)
    model = train(method, X[:3000], y[:3000], 3, TrainConfig(max_iters=3, inner_steps=20))
    save_model(model, tmp_path / "m.txt")
    again = load_model(tmp_path / "m.txt")
    assert dumps(again) == dumps(model)
    assert np.array_equal(again.predict_bits(X), model.predict_bits(X))


def test_model_file_rejects_garbage():
    with pytest.raises(InvalidParameter):
        loads("something else\n")
