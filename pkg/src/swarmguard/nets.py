"""Small feed-forward networks with explicit weights and reverse-mode gradients.

Used for both the actor (2 -> ... -> 2, squashed heads) and the critic
(4 -> ... -> 1, linear head).  Hidden activations are tanh.  No autodiff
framework: forward caches pre-activations and backward walks them in reverse.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ACTOR_HEAD = "actor"
CRITIC_HEAD = "critic"

CHECKPOINT_MAGIC = b"SWARMGUARD-CKPT"
CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    pass


@dataclass
class Net:
    layer_sizes: list[int]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    head: str = CRITIC_HEAD

    @classmethod
    def init(cls, layer_sizes: list[int], head: str,
             rng: np.random.Generator) -> "Net":
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            scale = math.sqrt(1.0 / fan_in)
            weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(layer_sizes=list(layer_sizes), weights=weights,
                   biases=biases, head=head)

    def copy(self) -> "Net":
        return Net(layer_sizes=list(self.layer_sizes),
                   weights=[w.copy() for w in self.weights],
                   biases=[b.copy() for b in self.biases], head=self.head)

    @property
    def n_layers(self) -> int:
        return len(self.weights)


def _apply_head(z: np.ndarray, head: str) -> np.ndarray:
    if head == CRITIC_HEAD:
        return z
    out = np.empty_like(z)
    out[:, 0] = math.pi * np.tanh(z[:, 0])          # movement angle
    out[:, 1] = 1.0 / (1.0 + np.exp(-z[:, 1]))      # speed ratio
    return out


def _head_jacobian_diag(z: np.ndarray, head: str) -> np.ndarray:
    if head == CRITIC_HEAD:
        return np.ones_like(z)
    jac = np.empty_like(z)
    jac[:, 0] = math.pi * (1.0 - np.tanh(z[:, 0]) ** 2)
    sig = 1.0 / (1.0 + np.exp(-z[:, 1]))
    jac[:, 1] = sig * (1.0 - sig)
    return jac


def forward(net: Net, x: np.ndarray, raw: bool = False) -> np.ndarray:
    """Batched forward pass; x is (n, d_in) or (d_in,)."""
    y, _ = forward_cached(net, np.atleast_2d(np.asarray(x, dtype=np.float64)),
                          raw=raw)
    return y[0] if np.asarray(x).ndim == 1 else y


def forward_cached(net: Net, x: np.ndarray,
                   raw: bool = False) -> tuple[np.ndarray, list[np.ndarray]]:
    if x.shape[1] != net.layer_sizes[0]:
        raise ValueError(
            f"input width {x.shape[1]} != first layer {net.layer_sizes[0]}")
    cache = [x]
    h = x
    for li in range(net.n_layers):
        z = h @ net.weights[li] + net.biases[li]
        if li < net.n_layers - 1:
            h = np.tanh(z)
        else:
            h = z
        cache.append(h)
    out = cache[-1] if raw else _apply_head(cache[-1], net.head)
    return out, cache


def backward(net: Net, cache: list[np.ndarray], dout: np.ndarray,
             raw: bool = False) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Reverse pass.  dout is dL/d(output); returns (dW, db, dX)."""
    z_last = cache[-1]
    dz = dout if raw else dout * _head_jacobian_diag(z_last, net.head)
    d_weights = [np.empty(0)] * net.n_layers
    d_biases = [np.empty(0)] * net.n_layers
    for li in range(net.n_layers - 1, -1, -1):
        h_prev = cache[li]
        d_weights[li] = h_prev.T @ dz
        d_biases[li] = dz.sum(axis=0)
        dh = dz @ net.weights[li].T
        if li > 0:
            dz = dh * (1.0 - cache[li] ** 2)  # cache[li] = tanh(z) for hidden
    return d_weights, d_biases, dh


def grad(net: Net, x: np.ndarray,
         loss_head: Callable[[np.ndarray], tuple[float, np.ndarray]],
         raw: bool = False) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Exact gradients of loss_head(forward(net, x)) w.r.t. all parameters."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y, cache = forward_cached(net, x, raw=raw)
    loss, dy = loss_head(y)
    d_w, d_b, _ = backward(net, cache, dy, raw=raw)
    return loss, d_w, d_b


def apply_update(net: Net, d_weights: list[np.ndarray],
                 d_biases: list[np.ndarray], step: float) -> None:
    for li in range(net.n_layers):
        net.weights[li] -= step * d_weights[li]
        net.biases[li] -= step * d_biases[li]


def _write_net(buf: io.BufferedIOBase, net: Net) -> None:
    buf.write(struct.pack("<I", len(net.layer_sizes)))
    buf.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
    for w, b in zip(net.weights, net.biases):
        buf.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def _read_exact(buf: io.BufferedIOBase, n: int) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint file")
    return data


def _read_net(buf: io.BufferedIOBase, head: str) -> Net:
    (n_sizes,) = struct.unpack("<I", _read_exact(buf, 4))
    if not 2 <= n_sizes <= 64:
        raise CheckpointError("implausible layer count")
    sizes = list(struct.unpack(f"<{n_sizes}I", _read_exact(buf, 4 * n_sizes)))
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(_read_exact(buf, 8 * fan_in * fan_out),
                          dtype="<f8").reshape(fan_in, fan_out).copy()
        b = np.frombuffer(_read_exact(buf, 8 * fan_out), dtype="<f8").copy()
        weights.append(w)
        biases.append(b)
    return Net(layer_sizes=sizes, weights=weights, biases=biases, head=head)


def save_checkpoint(actor: Net, critic: Net, cfg_dict: dict, path) -> None:
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        cfg_blob = json.dumps(cfg_dict, sort_keys=True).encode()
        f.write(struct.pack("<I", len(cfg_blob)))
        f.write(cfg_blob)
        _write_net(f, actor)
        _write_net(f, critic)


def load_checkpoint(path, expected_layer_sizes: tuple[list[int], list[int]] | None = None
                    ) -> tuple[Net, Net, dict]:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(f, 4))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (blob_len,) = struct.unpack("<I", _read_exact(f, 4))
        cfg_dict = json.loads(_read_exact(f, blob_len).decode())
        actor = _read_net(f, ACTOR_HEAD)
        critic = _read_net(f, CRITIC_HEAD)
        if f.read(1):
            raise CheckpointError("trailing bytes in checkpoint file")
    if expected_layer_sizes is not None:
        if actor.layer_sizes != expected_layer_sizes[0] or \
                critic.layer_sizes != expected_layer_sizes[1]:
            raise CheckpointError("checkpoint layer sizes do not match")
    return actor, critic, cfg_dict
