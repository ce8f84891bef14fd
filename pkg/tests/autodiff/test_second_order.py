import numpy as np
import pytest

from robust_amc.autodiff import GradientTape, Tensor, grad, grad2, ops
from robust_amc.errors import NonDifferentiablePathError, TapeError
from tests._gradcheck import numeric_grad, rel_error


def test_cubic_second_derivative():
    theta = Tensor(2.0)
    with GradientTape(higher_order=True) as tape:
        tape.watch(theta)
        loss = theta * theta * theta
    (g,) = grad2(tape, loss, [theta], [theta])
    assert g.item() == pytest.approx(12.0, abs=1e-12)


def test_quadratic_hessian_vector_product():
    a = Tensor(np.array([[2.0, 0.0], [0.0, 4.0]]))
    theta = Tensor(np.array([0.3, -0.7]))
    v = Tensor(np.array([1.0, 1.0]))
    with GradientTape(higher_order=True) as tape:
        tape.watch(theta)
        col = ops.reshape(theta, (2, 1))
        loss = ops.scale(ops.reduce_sum(ops.matmul(ops.transpose(col), ops.matmul(a, col))), 0.5)
    (hv,) = grad2(tape, loss, [theta], [theta], fn=lambda g: ops.reduce_sum(ops.mul(g[0], v)))
    np.testing.assert_allclose(hv.numpy(), [2.0, 4.0], rtol=0, atol=1e-14)


def test_hessian_vector_product_matches_finite_differences(rng):
    w = rng.normal(size=(4, 3))
    x = rng.normal(size=(5, 4))
    labels = np.array([0, 1, 2, 1, 0])
    v = rng.normal(size=(4, 3))

    def loss_of(wt: Tensor) -> Tensor:
        return ops.softmax_cross_entropy(ops.tanh(ops.matmul(Tensor(x), wt)), labels)

    wt = Tensor(w)
    with GradientTape(higher_order=True) as tape:
        tape.watch(wt)
        loss = loss_of(wt)
    (hv,) = grad2(tape, loss, [wt], [wt], fn=lambda g: ops.reduce_sum(ops.mul(g[0], Tensor(v))))

    def directional(m: np.ndarray) -> float:
        t = Tensor(m)
        with GradientTape() as inner:
            inner.watch(t)
            value = loss_of(t)
        (g,) = grad(inner, value, [t])
        return float(np.sum(g.numpy() * v))

    assert rel_error(hv.numpy(), numeric_grad(directional, w)) <= 1e-6


def test_grad_through_one_sgd_step(rng):
    """Differentiating a query loss through an inner update of the parameters."""
    x_s, x_q = rng.normal(size=(4, 2)), rng.normal(size=(4, 2))
    y_s, y_q = np.array([0, 1, 1, 0]), np.array([1, 0, 1, 0])
    alpha = 0.3

    def logits(theta: Tensor, x: np.ndarray) -> Tensor:
        z = ops.matmul(Tensor(x), ops.reshape(theta, (2, 1)))
        return ops.mul(ops.broadcast_to(z, (4, 2)), Tensor(np.array([[0.0, 1.0]])))

    def meta_loss(theta: Tensor, tape: GradientTape) -> Tensor:
        inner = ops.softmax_cross_entropy(logits(theta, x_s), y_s)
        (g,) = tape.gradient(inner, [theta])
        with tape.recording():
            adapted = ops.sub(theta, ops.scale(g, alpha))
            return ops.softmax_cross_entropy(logits(adapted, x_q), y_q)

    theta0 = rng.normal(size=2)
    t = Tensor(theta0)
    with GradientTape(higher_order=True) as tape:
        tape.watch(t)
        outer = meta_loss(t, tape)
    (meta_grad,) = tape.gradient(outer, [t])

    def numeric_meta(v: np.ndarray) -> float:
        tv = Tensor(v)
        with GradientTape(higher_order=True) as tp:
            tp.watch(tv)
            return meta_loss(tv, tp).item()

    assert rel_error(meta_grad.numpy(), numeric_grad(numeric_meta, theta0)) <= 1e-4


def test_grad2_needs_higher_order_tape():
    theta = Tensor(1.0)
    with GradientTape() as tape:
        tape.watch(theta)
        loss = theta * theta
    with pytest.raises(TapeError):
        grad2(tape, loss, [theta], [theta])


def test_grad2_flags_sign_on_the_path():
    theta = Tensor(np.array([0.5, -1.5]))
    with GradientTape(higher_order=True) as tape:
        tape.watch(theta)
        loss = ops.reduce_sum(ops.mul(ops.sign(theta), theta))
    with pytest.raises(NonDifferentiablePathError):
        grad2(tape, loss, [theta], [theta])


def test_higher_order_sweep_is_recorded():
    x = Tensor(np.array([1.0, 2.0]))
    with GradientTape(higher_order=True) as tape:
        tape.watch(x)
        loss = ops.reduce_sum(ops.mul(x, x))
    before = len(tape)
    (g,) = grad(tape, loss, [x])
    assert len(tape) > before
    assert tape.tracks(g)
