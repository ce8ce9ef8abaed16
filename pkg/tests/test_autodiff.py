import numpy as np
import pytest

from ratattn.tensor import (
    GraphError,
    PackedDoc,
    ParamSet,
    Var,
    backward,
    check_gradients,
    encode_sentences,
    sigmoid_bce_sum,
    softmax_xent,
    weighted_sum,
)
from ratattn.tensor.ops import add, matvec, rationale_logits, scale, sigmoid


def test_backward_without_forward_errors():
    leaf = Var(np.float64(3.0))
    with pytest.raises(GraphError):
        backward(leaf)


def test_backward_requires_scalar(rng):
    S = Var(rng.uniform(-1, 1, (3, 2)))
    out = weighted_sum(S, Var(np.ones(3)))
    with pytest.raises(GraphError):
        backward(out)


def test_untouched_parameter_gets_zero_gradient(rng):
    p = rng.uniform(-1, 1, 4)
    q = rng.uniform(-1, 1, 4)
    params = ParamSet({"p": p, "q": q})
    vp, vq = Var(params["p"]), Var(params["q"])
    loss = sigmoid_bce_sum(rationale_logits(Var(rng.uniform(-1, 1, (2, 4))),
                                            vp, Var(np.float64(0.0))),
                           [1.0, 0.0])
    grads = backward(loss, params, {"p": vp, "q": vq})
    assert np.array_equal(grads["q"], np.zeros(4))
    assert np.any(grads["p"] != 0)


def test_sum_of_squares_gradient(rng):
    p = rng.uniform(-2, 2, 5)
    vp = Var(p)
    # sum_i p_i^2 via the weighted-sum op with S = p as a column
    S = Var(p.reshape(5, 1))
    loss = weighted_sum(S, vp)
    grads_holder = ParamSet({"p": p})
    g = backward(loss, grads_holder, {"p": vp})
    # p appears as the weights only; dS route lands on the column Var
    np.testing.assert_allclose(g["p"], p, rtol=1e-15)
    np.testing.assert_allclose(S.grad.ravel(), p, rtol=1e-15)
    # both routes together are the d(sum p^2)/dp = 2p identity
    np.testing.assert_allclose(g["p"] + S.grad.ravel(), 2 * p, rtol=1e-15)


def test_reused_node_accumulates(rng):
    x = Var(rng.uniform(-1, 1, 3))
    y = add(x, x)  # dy/dx = 2
    loss = weighted_sum(Var(np.ones((3, 1))), y)
    params = ParamSet({"x": x.value})
    g = backward(loss, params, {"x": x})
    np.testing.assert_allclose(g["x"], 2 * np.ones(3), rtol=1e-15)


def ra_fixture(rng):
    tensors = {
        "E": rng.uniform(-0.3, 0.3, (8, 3)),
        "F2": rng.uniform(-0.3, 0.3, (2, 6)),
        "F3": rng.uniform(-0.3, 0.3, (2, 9)),
        "v": rng.uniform(-0.3, 0.3, 4),
        "c": np.float64(0.1),
        "U": rng.uniform(-0.3, 0.3, (2, 4)),
        "bd": np.zeros(2),
    }
    tensors["E"][0] = 0.0
    packed = PackedDoc([np.array([2, 3, 4, 5]), np.array([6, 7, 2])], (2, 3))
    r = np.array([1.0, 0.0])

    def loss_fn(pv):
        S = encode_sentences(packed, pv["E"], {2: pv["F2"], 3: pv["F3"]})
        z = rationale_logits(S, pv["v"], pv["c"])
        dv = weighted_sum(S, sigmoid(z))
        xent, _ = softmax_xent(matvec(pv["U"], dv, pv["bd"]), 1)
        return add(xent, scale(sigmoid_bce_sum(z, r), 0.5))

    return ParamSet(tensors), loss_fn


def test_joint_loss_matches_finite_differences(rng):
    params, loss_fn = ra_fixture(rng)
    assert check_gradients(loss_fn, params, epsilon=1e-4) < 1e-4
