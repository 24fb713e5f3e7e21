import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import fd_gradient, rel_err, signed_uniform
from smtl.autodiff import AdamState, Graph, NonFiniteError, ShapeError, Tensor, adam_step, glorot
from smtl.model import LstmCell


def test_tanh_at_origin():
    g = Graph()
    assert g.tanh(Tensor([0.0])).values[0] == 0.0


def test_softmax_symmetry():
    g = Graph()
    out = g.softmax(Tensor([2.5, 2.5, 2.5])).values
    assert np.allclose(out, [1 / 3, 1 / 3, 1 / 3])


def test_inner_product_orthogonal():
    g = Graph()
    assert float(g.dot(Tensor([1.0, 0.0]), Tensor([0.0, 1.0])).values) == 0.0


def test_square_gradient():
    g = Graph()
    x = Tensor(np.asarray(3.0))
    loss = g.mul(x, x)
    g.backward(loss)
    assert x.grad == pytest.approx(6.0)


def test_detached_parameter_gets_no_gradient():
    g = Graph()
    x = Tensor(np.asarray(2.0))
    detached = Tensor(np.asarray(4.0))
    loss = g.mul(x, x)
    g.backward(loss)
    assert detached.grad is None


def test_non_scalar_loss_rejected():
    g = Graph()
    out = g.tanh(Tensor([1.0, 2.0]))
    with pytest.raises(ShapeError):
        g.backward(out)


def test_shape_error_names_operation_and_shapes():
    g = Graph()
    with pytest.raises(ShapeError, match=r"add.*\(2,\).*\(3,\)"):
        g.add(Tensor([1.0, 2.0]), Tensor([1.0, 2.0, 3.0]))


# -- finite-difference checks, one per primitive --------------------------------


def _op_cases():
    """op name -> (input tensors, forward() -> (Graph, scalar loss)).

    Each forward closure rebuilds the graph over the SAME Tensor objects so
    finite differences can perturb them in place. Vector outputs are reduced
    to scalars through a fixed probe.
    """
    rng = np.random.default_rng(991)
    probe = signed_uniform(rng, (4,))
    vec = lambda n=4: Tensor(signed_uniform(rng, (n,)))
    cases = {}

    def case(name, inputs, fn):
        def forward():
            g = Graph()
            out = fn(g)
            return g, (out if out.shape == () else g.dot(out, Tensor(probe)))

        cases[name] = (inputs, forward)

    a, b = vec(), vec()
    case("add", [a, b], lambda g: g.add(a, b))
    c, d = vec(), vec()
    case("mul", [c, d], lambda g: g.mul(c, d))
    e = vec()
    case("scale", [e], lambda g: g.scale(e, -1.7))
    f = vec()
    case("tanh", [f], lambda g: g.tanh(f))
    h = vec()
    case("sigmoid", [h], lambda g: g.sigmoid(h))
    i = Tensor(rng.uniform(0.1, 2.0, 4))
    case("log", [i], lambda g: g.log(i))
    w, x = Tensor(signed_uniform(rng, (4, 3))), vec(3)
    case("affine", [w, x], lambda g: g.affine(w, x))
    w2, x2, b2 = Tensor(signed_uniform(rng, (4, 3))), vec(3), vec(4)
    case("affine_bias", [w2, x2, b2], lambda g: g.affine(w2, x2, b2))
    w3, x3 = Tensor(signed_uniform(rng, (3, 4))), vec(3)
    case("matvec_t", [w3, x3], lambda g: g.matvec_t(w3, x3))
    j, k = vec(), vec()
    case("dot", [j, k], lambda g: g.dot(j, k))
    l, m = vec(2), vec(2)
    case("concat", [l, m], lambda g: g.concat([l, m]))
    n = vec(7)
    case("slice", [n], lambda g: g.slice(n, 1, 5))
    o, p = vec(), vec()
    case("stack_rows", [o, p], lambda g: g.matvec_t(g.stack_rows([o, p]), Tensor([0.3, -0.9])))
    q = Tensor(signed_uniform(rng, (5, 4)))
    case("lookup", [q], lambda g: g.lookup(q, 2))
    r = vec()
    case("softmax", [r], lambda g: g.softmax(r))
    s = vec()
    case("nll_pick", [s], lambda g: g.nll_pick(g.log(g.softmax(s)), 1))
    return cases


@pytest.mark.parametrize("op", sorted(_op_cases()))
def test_primitive_gradient_matches_finite_differences(op):
    inputs, forward = _op_cases()[op]
    g, loss = forward()
    g.backward(loss)
    for tensor in inputs:
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.values)
        numeric = fd_gradient(lambda: float(forward()[1].values), tensor)
        assert rel_err(analytic, numeric) < 1e-4, f"{op}: gradient mismatch"


def test_lstm_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    params = {}
    cell = LstmCell(params, "lstm", input_size=3, hidden=4, rng=rng)
    xs = [Tensor(signed_uniform(rng, (3,))) for _ in range(4)]
    target = Tensor(signed_uniform(rng, (4,)))

    def forward():
        g = Graph()
        state = cell.zero_state()
        for x in xs:
            state = cell.step(g, x, state)
        return g, g.dot(state[0], target)

    g, loss = forward()
    g.backward(loss)
    for name, tensor in params.items():
        analytic = tensor.grad.copy()
        tensor.zero_grad()
        numeric = fd_gradient(lambda: float(forward()[1].values), tensor)
        assert rel_err(analytic, numeric) < 1e-4, name


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=-30, max_value=30), min_size=1, max_size=8))
def test_softmax_is_a_probability_simplex(logits):
    g = Graph()
    out = g.softmax(Tensor(logits)).values
    assert (out > 0).all()
    assert abs(out.sum() - 1.0) <= 1e-9


def test_backward_is_deterministic():
    def run():
        rng = np.random.default_rng(123)
        w = Tensor(rng.normal(size=(4, 4)))
        x = Tensor(rng.normal(size=4))
        g = Graph()
        loss = g.nll_pick(g.log(g.softmax(g.tanh(g.affine(w, x)))), 2)
        g.backward(loss)
        return w.grad.copy(), x.grad.copy()

    w1, x1 = run()
    w2, x2 = run()
    assert (w1 == w2).all() and (x1 == x2).all()


# -- Adam ------------------------------------------------------------------------


def test_adam_zero_gradient_leaves_parameters_unchanged():
    p = Tensor(np.array([1.0, -2.0]), name="p")
    p.grad = np.zeros(2)
    before = p.values.copy()
    adam_step({"p": p}, AdamState())
    assert (p.values == before).all()


def test_adam_first_step_moves_by_learning_rate():
    # with g=1: m-hat = 1, v-hat = 1, so the step is lr / (1 + eps)
    p = Tensor(np.asarray(0.5), name="p")
    p.grad = np.asarray(1.0)
    adam_step({"p": p}, AdamState(lr=0.001))
    assert float(p.values) == pytest.approx(0.5 - 0.001, abs=1e-9)


def test_adam_converges_on_quadratic():
    p = Tensor(np.asarray(5.0), name="p")
    state = AdamState(lr=0.1)
    for _ in range(1000):
        p.grad = np.asarray(2.0 * float(p.values))
        adam_step({"p": p}, state)
    assert abs(float(p.values)) < 0.1


def test_adam_rejects_non_finite_gradients_by_name():
    p = Tensor(np.asarray(1.0), name="enc/W")
    p.grad = np.asarray(np.nan)
    with pytest.raises(NonFiniteError, match="enc/W"):
        adam_step({"enc/W": p}, AdamState())


def test_adam_zeroes_gradients_and_counts_steps():
    p = Tensor(np.array([1.0]), name="p")
    state = AdamState()
    p.grad = np.array([0.5])
    adam_step({"p": p}, state)
    assert p.grad is None
    assert state.step == 1
    assert state.m["p"].shape == p.values.shape


def test_adam_untouched_parameter_stays_bit_identical():
    trained = Tensor(np.array([1.0]), name="a")
    frozen = Tensor(np.array([2.0]), name="b")
    before = frozen.values.copy()
    state = AdamState()
    for _ in range(3):
        trained.grad = np.array([1.0])
        adam_step({"a": trained, "b": frozen}, state)
    assert (frozen.values == before).all()


def test_gradient_clipping_rescales_to_global_norm():
    p = Tensor(np.array([3.0, 4.0]), name="p")  # grad norm 50 -> scaled to 5
    p.grad = np.array([30.0, 40.0])
    state = AdamState(lr=0.001, clip_norm=5.0)
    adam_step({"p": p}, state)
    clipped = np.array([3.0, 4.0])  # 5 * [30, 40] / 50
    # step one: m-hat = g, v-hat = g^2, so the update is -lr * g / (|g| + eps)
    assert np.allclose(p.values - np.array([3.0, 4.0]), -state.lr * clipped / (np.abs(clipped) + state.eps))


def test_glorot_bounds():
    t = glorot(np.random.default_rng(0), 30, 20, "w")
    limit = np.sqrt(6 / 50)
    assert t.values.shape == (30, 20)
    assert np.abs(t.values).max() <= limit
