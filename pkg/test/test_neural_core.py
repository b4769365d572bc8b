import os

import numpy as np
import pytest
import torch
import torch.nn as nn

from SkillRL.math import FixedStdNormal, gaussian_log_prob
from SkillRL.misc.errors import CheckpointError, ShapeError
from SkillRL.net import (
    MLP,
    SkillAdam,
    adam_step,
    checkpoint_roundtrip,
    count_parameters,
    forward_backward,
    grad_check,
    load_checkpoint,
    load_module_tensors,
    load_optimizer_tensors,
    module_tensors,
    optimizer_tensors,
    save_checkpoint,
)


class _TripleGrad(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        return x.clone()

    @staticmethod
    def backward(ctx, grad):
        return 3 * grad


class BrokenBackward(nn.Module):
    """An MLP whose backward pass triples the gradient reaching its output. """
    def __init__(self):
        super().__init__()
        self.net = MLP(3, 2, [4], output_scale=1.0)
        self.input_dim = 3

    def forward(self, x):
        return _TripleGrad.apply(self.net(x))


def test_linear_layer_gradients():
    net = MLP(3, 2, [])
    x = torch.tensor([[1.0, 2.0, 3.0]])
    out, grads, dx = forward_backward(net, x, torch.ones(1, 2))
    assert out.shape == (1, 2)
    assert set(grads) == {"model.0.weight", "model.0.bias"}
    assert torch.allclose(grads["model.0.weight"], x.repeat(2, 1))
    assert torch.allclose(grads["model.0.bias"], torch.ones(2))
    assert torch.allclose(dx, net.model[0].weight.sum(0, keepdim=True))
    # nothing accumulated into .grad
    assert all(p.grad is None for p in net.parameters())


def test_relu_blocks_negative_preactivation():
    net = MLP(2, 1, [2], output_scale=1.0)
    with torch.no_grad():
        net.model[0].weight.copy_(torch.eye(2))
        net.model[0].bias.zero_()
    _, grads, dx = forward_backward(net, torch.tensor([[-1.0, 2.0]]), torch.ones(1, 1))
    assert torch.all(grads["model.0.weight"][0] == 0)
    assert grads["model.0.bias"][0] == 0
    assert dx[0, 0] == 0


def test_forward_backward_shapes():
    net = MLP(3, 2, [4])
    with pytest.raises(ShapeError):
        forward_backward(net, torch.zeros(1, 5), torch.ones(1, 2))
    with pytest.raises(ShapeError):
        forward_backward(net, torch.zeros(1, 3), torch.ones(1, 3))


@pytest.mark.parametrize("head", ["identity", "sigmoid", "unit"])
def test_grad_check_passes(head):
    net = MLP(5, 3, [8, 8], activation=nn.Tanh, head=head, output_scale=1.0)
    err = grad_check(net, seed=3)
    assert err < 1e-4
    assert grad_check(net, seed=3) == err


def test_grad_check_catches_broken_backward():
    assert grad_check(BrokenBackward(), seed=0) > 1e-2


def test_mlp_heads_and_activations():
    net = MLP(4, 3, [8, 6], head="unit")
    x = torch.randn(5, 4)
    assert torch.allclose(net(x).norm(dim=-1), torch.ones(5), atol=1e-5)
    acts = net.activations(x)
    assert [a.shape[-1] for a in acts] == [8, 6]
    assert MLP(4, 0, [8, 6]).output_dim == 6
    assert count_parameters(MLP(3, 2, [])) == 8
    with pytest.raises(ValueError):
        MLP(4, 3, head="softplus")
    with pytest.raises(ValueError):
        net(torch.zeros(1, 5))


def test_log_prob_agrees_with_torch():
    mean = np.array([[0.1, -0.2, 0.3]])
    action = np.array([[0.0, 0.0, 0.5]])
    dist = FixedStdNormal(torch.as_tensor(mean), 0.3)
    expected = dist.log_prob(torch.as_tensor(action)).item()
    assert gaussian_log_prob(action, mean, 0.3)[0] == pytest.approx(expected)


def _param(value):
    return nn.Parameter(torch.tensor(value, dtype=torch.float64))


def test_adam_zero_gradient_is_noop():
    p = _param([1.0, -2.0])
    opt = SkillAdam([p], lr=1e-2)
    assert adam_step(opt, [p], [torch.zeros(2, dtype=torch.float64)])
    assert torch.equal(p.data, torch.tensor([1.0, -2.0], dtype=torch.float64))


def test_adam_first_step_moves_by_lr():
    p = _param([1.0, -2.0])
    opt = SkillAdam([p], lr=1e-2)
    adam_step(opt, [p], [torch.tensor([0.5, -3.0], dtype=torch.float64)])
    assert torch.allclose(p.data, torch.tensor([1.0 - 1e-2, -2.0 + 1e-2], dtype=torch.float64), atol=1e-7)


def test_adam_decoupled_weight_decay():
    p = _param([1.0])
    opt = SkillAdam([p], lr=1e-2, weight_decay=1e-4)
    adam_step(opt, [p], [torch.zeros(1, dtype=torch.float64)])
    assert p.item() == pytest.approx(1.0 - 1e-6, abs=1e-12)


def test_adam_skips_non_finite():
    p = _param([1.0, 2.0])
    opt = SkillAdam([p], lr=1e-2)
    assert not adam_step(opt, [p], [torch.tensor([np.nan, 1.0], dtype=torch.float64)])
    assert opt.skipped == 1
    assert torch.equal(p.data, torch.tensor([1.0, 2.0], dtype=torch.float64))
    with pytest.raises(ValueError):
        adam_step(opt, [p], [torch.zeros(3, dtype=torch.float64)])
    with pytest.raises(ValueError):
        adam_step(opt, [p], [])


def test_checkpoint_roundtrip_is_byte_exact(tmp_path):
    path = str(tmp_path / "ckpt.skf")
    tensors = {"actor/w": np.arange(6, dtype=np.float32).reshape(2, 3), "actor/b": np.ones(3), "scalar": np.float32(2.5)}
    save_checkpoint(path, tensors, {"config_hash": "abc", "iteration": np.int64(3)})
    loaded, meta = load_checkpoint(path)
    assert list(loaded) == ["actor/w", "actor/b", "scalar"]
    assert np.array_equal(loaded["actor/w"], tensors["actor/w"])
    assert loaded["scalar"].shape == ()
    assert meta["iteration"] == 3

    out = str(tmp_path / "again.skf")
    checkpoint_roundtrip(path, out)
    with open(path, "rb") as a, open(out, "rb") as b:
        assert a.read() == b.read()


def test_truncated_checkpoint(tmp_path):
    path = str(tmp_path / "ckpt.skf")
    save_checkpoint(path, {"w": np.zeros([4, 4])})
    with open(path, "rb") as fp:
        data = fp.read()
    with open(path, "wb") as fp:
        fp.write(data[:-5])
    with pytest.raises(CheckpointError) as e:
        load_checkpoint(path)
    assert e.value.offset is not None

    with open(path, "wb") as fp:
        fp.write(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError) as e:
        load_checkpoint(path)
    assert e.value.offset == 0
    with pytest.raises(CheckpointError):
        load_checkpoint(str(tmp_path / "missing.skf"))


def test_checkpoint_config_hash(tmp_path):
    path = str(tmp_path / "ckpt.skf")
    save_checkpoint(path, {"w": np.zeros(2)}, {"config_hash": "aaa"})
    load_checkpoint(path, config_hash="aaa")
    with pytest.raises(CheckpointError):
        load_checkpoint(path, config_hash="bbb")
    tensors, _ = load_checkpoint(path, config_hash="bbb", force=True)
    assert "w" in tensors


def test_module_and_optimizer_tensors(tmp_path):
    net = MLP(3, 2, [4])
    opt = SkillAdam(net.parameters(), lr=1e-3)
    out, grads, _ = forward_backward(net, torch.randn(2, 3), torch.ones(2, 2))
    adam_step(opt, list(net.parameters()), [grads[n] for n, _ in net.named_parameters()])

    tensors = module_tensors(net, "net")
    opt_tensors, opt_meta = optimizer_tensors(opt, "net_opt")
    tensors.update(opt_tensors)
    path = save_checkpoint(str(tmp_path / "ckpt.skf"), tensors, {"optim": opt_meta})
    loaded, meta = load_checkpoint(path)

    other = MLP(3, 2, [4])
    other_opt = SkillAdam(other.parameters(), lr=1e-3)
    load_module_tensors(other, loaded, "net")
    load_optimizer_tensors(other_opt, loaded, meta["optim"], "net_opt")
    for a, b in zip(net.parameters(), other.parameters()):
        assert torch.equal(a, b)
    state = other_opt.state_dict()["state"][0]
    assert float(state["step"]) == 1.0
    assert torch.allclose(state["exp_avg"], opt.state_dict()["state"][0]["exp_avg"])

    with pytest.raises(CheckpointError):
        load_module_tensors(MLP(3, 2, [5]), loaded, "net")
