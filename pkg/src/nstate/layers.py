"""Neural network layers with explicit forward and backward passes.

Every layer computes its own parameter and input gradients; nothing here
relies on autodiff. Conventions:

* 1-D stacks carry activations as ``(batch, channels, time)``.
* 2-D stacks carry ``(batch, feature_maps, height, width)`` where height is
  the electrode axis and width is time.
* Recurrent layers take sequences as ``(batch, timesteps, features)``.
* "Same" padding produces ``ceil(T / stride)`` output steps with the extra
  pad sample on the right when the total is odd.

``forward(x, train=...)`` caches whatever ``backward`` needs; ``backward``
returns the input gradient and leaves parameter gradients in ``self.grads``.
Parameter counts include batch-norm running statistics, matching the
accounting used by the reference model summaries.
"""

from __future__ import annotations

import math

import numpy as np

from .numerics import seeded_rng


def same_pad(t: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """Output length and (left, right) padding for same-padded convolution."""
    out = -(-t // stride)  # ceil
    total = max((out - 1) * stride + kernel - t, 0)
    left = total // 2
    return out, left, total - left


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    """Base class: named parameters, gradients, and optional extra state."""

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.stats: dict[str, np.ndarray] = {}  # tracked but not trained

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def out_shape(self, shape: tuple[int, ...]) -> tuple[int, ...]:
        return shape

    def param_count(self) -> int:
        n = sum(p.size for p in self.params.values())
        return n + sum(s.size for s in self.stats.values())

    def state_items(self):
        """(name, array) pairs in serialization order: params, then stats."""
        yield from self.params.items()
        yield from self.stats.items()

    def constrain(self) -> None:
        """Post-update weight constraint; default none."""

    def reseed(self, rng: np.random.Generator) -> None:
        """Install the random stream used by stochastic layers."""

    def label(self) -> str:
        return type(self).__name__


class Conv1D(Layer):
    """Same-padded strided cross-correlation over the time axis."""

    def __init__(self, in_channels: int, filters: int, kernel: int, stride: int = 1,
                 *, rng: np.random.Generator, dtype=np.float32) -> None:
        super().__init__()
        if kernel < 1 or stride < 1:
            raise ValueError("kernel and stride must be >= 1")
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = kernel
        self.stride = stride
        fan = in_channels * kernel
        self.params["w"] = glorot_uniform(rng, (filters, in_channels, kernel),
                                          fan, filters * kernel, dtype)
        self.params["b"] = np.zeros(filters, dtype=dtype)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        b, c, t = x.shape
        if c != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {c}")
        out, left, right = same_pad(t, self.kernel, self.stride)
        xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
        win = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=2)
        win = np.ascontiguousarray(win[:, :, :: self.stride][:, :, :out])
        self._cache = (win, t, left, xp.shape[2])
        y = np.einsum("bcok,fck->bfo", win, self.params["w"], optimize=True)
        return y + self.params["b"][None, :, None]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        win, t, left, tp = self._cache
        w = self.params["w"]
        self.grads["w"] = np.einsum("bfo,bcok->fck", dy, win, optimize=True)
        self.grads["b"] = dy.sum(axis=(0, 2))
        out = dy.shape[2]
        dxp = np.zeros((dy.shape[0], self.in_channels, tp), dtype=dy.dtype)
        for k in range(self.kernel):
            dxp[:, :, k : k + self.stride * out : self.stride] += np.einsum(
                "bfo,fc->bco", dy, w[:, :, k], optimize=True)
        return dxp[:, :, left : left + t]

    def out_shape(self, shape):
        c, t = shape
        return (self.filters, same_pad(t, self.kernel, self.stride)[0])

    def label(self):
        return f"conv1d(f={self.filters}, k={self.kernel}, s={self.stride})"


class Conv2DTemporal(Layer):
    """(1, k) convolution over the time axis of a (maps, height, width) stack.

    Bias-free, stride 1, same padding. The kernel never mixes rows, so each
    electrode row is filtered identically.
    """

    def __init__(self, in_maps: int, filters: int, kernel: int,
                 *, rng: np.random.Generator, dtype=np.float32) -> None:
        super().__init__()
        self.in_maps = in_maps
        self.filters = filters
        self.kernel = kernel
        fan = in_maps * kernel
        self.params["w"] = glorot_uniform(rng, (filters, in_maps, kernel),
                                          fan, filters * kernel, dtype)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        b, c, h, t = x.shape
        if c != self.in_maps:
            raise ValueError(f"expected {self.in_maps} input maps, got {c}")
        out, left, right = same_pad(t, self.kernel, 1)
        xp = np.pad(x, ((0, 0), (0, 0), (0, 0), (left, right)))
        win = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=3)
        win = np.ascontiguousarray(win[:, :, :, :out])
        self._cache = (win, t, left, xp.shape[3])
        return np.einsum("bchtk,fck->bfht", win, self.params["w"], optimize=True)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        win, t, left, tp = self._cache
        w = self.params["w"]
        out = dy.shape[3]
        self.grads["w"] = np.einsum("bfht,bchtk->fck", dy, win, optimize=True)
        dxp = np.zeros((dy.shape[0], self.in_maps, dy.shape[2], tp), dtype=dy.dtype)
        for k in range(self.kernel):
            dxp[:, :, :, k : k + out] += np.einsum("bfht,fc->bcht", dy, w[:, :, k],
                                                   optimize=True)
        return dxp[:, :, :, left : left + t]

    def out_shape(self, shape):
        c, h, t = shape
        return (self.filters, h, t)

    def label(self):
        return f"conv2d_temporal(f={self.filters}, k=(1,{self.kernel}))"


class DepthwiseConv2D(Layer):
    """Per-map spatial filters spanning the full electrode axis.

    Each of the ``in_maps`` feature maps gets ``depth_mult`` filters of shape
    (height, 1); convolving collapses the electrode axis to 1. Bias-free.
    After every optimizer step each spatial filter is renormalized to an L2
    norm of at most ``max_norm``.
    """

    def __init__(self, in_maps: int, depth_mult: int, height: int, max_norm: float = 1.0,
                 *, rng: np.random.Generator, dtype=np.float32) -> None:
        super().__init__()
        self.in_maps = in_maps
        self.depth_mult = depth_mult
        self.height = height
        self.max_norm = max_norm
        self.params["w"] = glorot_uniform(rng, (in_maps, depth_mult, height),
                                          height, depth_mult, dtype)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        b, c, h, t = x.shape
        if c != self.in_maps or h != self.height:
            raise ValueError(f"expected ({self.in_maps}, {self.height}, T) input, "
                             f"got ({c}, {h}, {t})")
        self._x = x
        y = np.einsum("bcht,cdh->bcdt", x, self.params["w"], optimize=True)
        return y.reshape(b, c * self.depth_mult, 1, t)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, _, _, t = dy.shape
        dy4 = dy.reshape(b, self.in_maps, self.depth_mult, t)
        self.grads["w"] = np.einsum("bcdt,bcht->cdh", dy4, self._x, optimize=True)
        return np.einsum("bcdt,cdh->bcht", dy4, self.params["w"], optimize=True)

    def constrain(self) -> None:
        w = self.params["w"]
        norms = np.sqrt((w ** 2).sum(axis=2, keepdims=True))
        np.divide(w, norms / self.max_norm, out=w, where=norms > self.max_norm)

    def out_shape(self, shape):
        c, h, t = shape
        return (c * self.depth_mult, 1, t)

    def label(self):
        return f"depthwise_conv2d(d={self.depth_mult}, h={self.height})"


class SeparableConv2D(Layer):
    """Depthwise (1, k) temporal filter followed by 1x1 pointwise mixing.

    Operates on (maps, 1, time) stacks; bias-free in both stages.
    """

    def __init__(self, in_maps: int, filters: int, kernel: int,
                 *, rng: np.random.Generator, dtype=np.float32) -> None:
        super().__init__()
        self.in_maps = in_maps
        self.filters = filters
        self.kernel = kernel
        self.params["dw"] = glorot_uniform(rng, (in_maps, kernel), kernel, kernel, dtype)
        self.params["pw"] = glorot_uniform(rng, (in_maps, filters), in_maps, filters, dtype)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        b, c, h, t = x.shape
        if c != self.in_maps or h != 1:
            raise ValueError(f"expected ({self.in_maps}, 1, T) input, got ({c}, {h}, {t})")
        x3 = x[:, :, 0, :]
        out, left, right = same_pad(t, self.kernel, 1)
        xp = np.pad(x3, ((0, 0), (0, 0), (left, right)))
        win = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=2)
        win = np.ascontiguousarray(win[:, :, :out])
        z = np.einsum("bctk,ck->bct", win, self.params["dw"], optimize=True)
        self._cache = (win, z, t, left, xp.shape[2])
        y = np.einsum("bct,cf->bft", z, self.params["pw"], optimize=True)
        return y[:, :, None, :]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        win, z, t, left, tp = self._cache
        dy3 = dy[:, :, 0, :]
        out = dy3.shape[2]
        self.grads["pw"] = np.einsum("bct,bft->cf", z, dy3, optimize=True)
        dz = np.einsum("bft,cf->bct", dy3, self.params["pw"], optimize=True)
        self.grads["dw"] = np.einsum("bct,bctk->ck", dz, win, optimize=True)
        dxp = np.zeros((dy.shape[0], self.in_maps, tp), dtype=dy.dtype)
        for k in range(self.kernel):
            dxp[:, :, k : k + out] += dz * self.params["dw"][None, :, k : k + 1]
        return dxp[:, :, left : left + t][:, :, None, :]

    def out_shape(self, shape):
        c, h, t = shape
        return (self.filters, 1, t)

    def label(self):
        return f"separable_conv2d(f={self.filters}, k=(1,{self.kernel}))"


class AvgPool2D(Layer):
    """Non-overlapping (1, p) mean pooling; a trailing remainder is dropped."""

    def __init__(self, pool: int) -> None:
        super().__init__()
        if pool < 1:
            raise ValueError("pool must be >= 1")
        self.pool = pool

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        t = x.shape[-1]
        n = t // self.pool
        self._in_t = t
        lead = x.shape[:-1]
        y = x[..., : n * self.pool].reshape(*lead, n, self.pool).mean(axis=-1)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        n = dy.shape[-1]
        dx = np.zeros(dy.shape[:-1] + (self._in_t,), dtype=dy.dtype)
        dx[..., : n * self.pool] = np.repeat(dy / self.pool, self.pool, axis=-1)
        return dx

    def out_shape(self, shape):
        return shape[:-1] + (shape[-1] // self.pool,)

    def label(self):
        return f"avg_pool2d(1,{self.pool})"


class BatchNorm(Layer):
    """Per-feature normalization over all non-feature axes (axis 1 is features).

    Train mode standardizes with batch statistics and gradients flow through
    them; infer mode uses the tracked running statistics. The parameter count
    is 4 per feature: gamma, beta, running mean, running variance.
    """

    def __init__(self, features: int, momentum: float = 0.99, eps: float = 1e-3,
                 *, dtype=np.float32) -> None:
        super().__init__()
        self.features = features
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(features, dtype=dtype)
        self.params["beta"] = np.zeros(features, dtype=dtype)
        self.stats["running_mean"] = np.zeros(features, dtype=dtype)
        self.stats["running_var"] = np.ones(features, dtype=dtype)

    def _bshape(self, ndim: int):
        return (1, self.features) + (1,) * (ndim - 2)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.shape[1] != self.features:
            raise ValueError(f"expected {self.features} features on axis 1")
        if x.shape[0] == 0:
            raise ValueError("zero-size batch")
        axes = (0,) + tuple(range(2, x.ndim))
        shape = self._bshape(x.ndim)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            std = np.sqrt(var + self.eps)
            xhat = (x - mean.reshape(shape)) / std.reshape(shape)
            m = self.momentum
            self.stats["running_mean"][:] = m * self.stats["running_mean"] + (1 - m) * mean
            self.stats["running_var"][:] = m * self.stats["running_var"] + (1 - m) * var
            count = x.size // self.features
            self._cache = (xhat, std, count, axes, shape)
            self._train_pass = True
        else:
            mean = self.stats["running_mean"]
            std = np.sqrt(self.stats["running_var"] + self.eps)
            xhat = (x - mean.reshape(shape)) / std.reshape(shape)
            self._cache = (xhat, std, None, axes, shape)
            self._train_pass = False
        return self.params["gamma"].reshape(shape) * xhat + self.params["beta"].reshape(shape)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        xhat, std, count, axes, shape = self._cache
        self.grads["gamma"] = (dy * xhat).sum(axis=axes)
        self.grads["beta"] = dy.sum(axis=axes)
        dxhat = dy * self.params["gamma"].reshape(shape)
        if not self._train_pass:
            return dxhat / std.reshape(shape)
        # gradient through the batch mean and variance
        sum_dxhat = dxhat.sum(axis=axes).reshape(shape)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes).reshape(shape)
        return (dxhat - sum_dxhat / count - xhat * sum_dxhat_xhat / count) / std.reshape(shape)

    def label(self):
        return f"batchnorm({self.features})"


class Dense(Layer):
    """Affine map on (batch, features) inputs."""

    def __init__(self, n_in: int, n_out: int, *, rng: np.random.Generator,
                 dtype=np.float32) -> None:
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        self.params["w"] = glorot_uniform(rng, (n_in, n_out), n_in, n_out, dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.shape[1] != self.n_in:
            raise ValueError(f"expected {self.n_in} input features, got {x.shape[1]}")
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.grads["w"] = self._x.T @ dy
        self.grads["b"] = dy.sum(axis=0)
        return dy @ self.params["w"].T

    def out_shape(self, shape):
        return (self.n_out,)

    def label(self):
        return f"dense({self.n_in}->{self.n_out})"


class Dropout(Layer):
    """Inverted dropout: train-time masking with 1/(1-rate) rescaling."""

    def __init__(self, rate: float) -> None:
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.rng = seeded_rng(0, 0)

    def reseed(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def _mask_shape(self, x: np.ndarray):
        return x.shape

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        mask = (self.rng.random(self._mask_shape(x)) >= self.rate).astype(x.dtype)
        self._mask = mask / keep
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return dy
        return dy * self._mask

    def label(self):
        return f"dropout({self.rate})"


class SpatialDropout1D(Dropout):
    """Dropout that removes whole feature rows of a (batch, features, time) map."""

    def _mask_shape(self, x: np.ndarray):
        return x.shape[:2] + (1,)

    def label(self):
        return f"spatial_dropout1d({self.rate})"


class Flatten(Layer):
    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy.reshape(self._shape)

    def out_shape(self, shape):
        return (int(np.prod(shape)),)

    def label(self):
        return "flatten"


class TimeDistributedFlatten(Layer):
    """View a (batch, features, time) map as a time-major feature sequence.

    The per-timestep feature column becomes the step vector, giving
    (batch, time, features) for a downstream recurrent layer.
    """

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        return np.ascontiguousarray(x.transpose(0, 2, 1))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(dy.transpose(0, 2, 1))

    def out_shape(self, shape):
        c, t = shape
        return (t, c)

    def label(self):
        return "time_distributed_flatten"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LSTM(Layer):
    """Single-direction LSTM returning the final hidden state.

    Gate order is (input, forget, cell, output) with sigmoid / sigmoid /
    tanh / sigmoid activations; ``c_t = f*c + i*g`` and ``h_t = o*tanh(c_t)``.
    Initial states are zero and the forget-gate bias starts at 1.
    """

    def __init__(self, input_size: int, units: int, *, rng: np.random.Generator,
                 dtype=np.float32, go_backwards: bool = False) -> None:
        super().__init__()
        self.input_size = input_size
        self.units = units
        self.go_backwards = go_backwards
        h = units
        self.params["w"] = glorot_uniform(rng, (input_size, 4 * h), input_size, 4 * h, dtype)
        self.params["u"] = glorot_uniform(rng, (h, 4 * h), h, 4 * h, dtype)
        b = np.zeros(4 * h, dtype=dtype)
        b[h : 2 * h] = 1.0
        self.params["b"] = b

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ValueError(f"expected (batch, time, {self.input_size}) input")
        if x.shape[1] == 0:
            raise ValueError("empty sequence")
        if self.go_backwards:
            x = x[:, ::-1]
        b, steps, _ = x.shape
        h = self.units
        w, u, bias = self.params["w"], self.params["u"], self.params["b"]
        hs = np.zeros((b, h), dtype=x.dtype)
        cs = np.zeros((b, h), dtype=x.dtype)
        cache = []
        for t in range(steps):
            z = x[:, t] @ w + hs @ u + bias
            i = _sigmoid(z[:, :h])
            f = _sigmoid(z[:, h : 2 * h])
            g = np.tanh(z[:, 2 * h : 3 * h])
            o = _sigmoid(z[:, 3 * h :])
            c_new = f * cs + i * g
            tc = np.tanh(c_new)
            cache.append((x[:, t], hs, cs, i, f, g, o, tc))
            cs = c_new
            hs = o * tc
        self._cache = cache
        return hs

    def backward(self, dh_final: np.ndarray) -> np.ndarray:
        cache = self._cache
        steps = len(cache)
        b = dh_final.shape[0]
        h = self.units
        w, u = self.params["w"], self.params["u"]
        dw = np.zeros_like(w)
        du = np.zeros_like(u)
        db = np.zeros_like(self.params["b"])
        dx = np.zeros((b, steps, self.input_size), dtype=dh_final.dtype)
        dh = dh_final.astype(w.dtype, copy=True)
        dc = np.zeros((b, h), dtype=w.dtype)
        for t in range(steps - 1, -1, -1):
            xt, h_prev, c_prev, i, f, g, o, tc = cache[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc ** 2)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g ** 2), do * o * (1 - o)],
                axis=1)
            dw += xt.T @ dz
            du += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, t] = dz @ w.T
            dh = dz @ u.T
            dc = dc * f
        self.grads["w"], self.grads["u"], self.grads["b"] = dw, du, db
        if self.go_backwards:
            dx = dx[:, ::-1]
        return np.ascontiguousarray(dx)

    def out_shape(self, shape):
        return (self.units,)

    def label(self):
        return f"lstm({self.units}{', reversed' if self.go_backwards else ''})"


class Bidirectional(Layer):
    """Forward and backward LSTMs over the same sequence, final states concatenated."""

    def __init__(self, input_size: int, units: int, *, rng: np.random.Generator,
                 dtype=np.float32) -> None:
        super().__init__()
        self.units = units
        self.fwd = LSTM(input_size, units, rng=rng, dtype=dtype)
        self.bwd = LSTM(input_size, units, rng=rng, dtype=dtype, go_backwards=True)

    @property
    def params(self):
        merged = {f"fwd.{k}": v for k, v in self.fwd.params.items()}
        merged.update({f"bwd.{k}": v for k, v in self.bwd.params.items()})
        return merged

    @params.setter
    def params(self, value):
        if value:  # only the empty dict from Layer.__init__ is accepted
            raise AttributeError("set parameters on .fwd / .bwd directly")

    @property
    def grads(self):
        merged = {f"fwd.{k}": v for k, v in self.fwd.grads.items()}
        merged.update({f"bwd.{k}": v for k, v in self.bwd.grads.items()})
        return merged

    @grads.setter
    def grads(self, value):
        if value:
            raise AttributeError("gradients live on .fwd / .bwd")

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        hf = self.fwd.forward(x, train)
        hb = self.bwd.forward(x, train)
        return np.concatenate([hf, hb], axis=1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        h = self.units
        return self.fwd.backward(dy[:, :h]) + self.bwd.backward(dy[:, h:])

    def out_shape(self, shape):
        return (2 * self.units,)

    def label(self):
        return f"bilstm({self.units}x2)"


class Activation(Layer):
    """Elementwise nonlinearity: relu, leaky_relu, elu, sigmoid or tanh."""

    KINDS = ("relu", "leaky_relu", "elu", "sigmoid", "tanh")

    def __init__(self, kind: str, slope: float = 0.3, alpha: float = 1.0) -> None:
        super().__init__()
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}")
        if kind == "leaky_relu" and not 0.0 < slope < 1.0:
            raise ValueError("leaky_relu slope must be in (0, 1)")
        if kind == "elu" and alpha <= 0:
            raise ValueError("elu alpha must be positive")
        self.kind = kind
        self.slope = slope
        self.alpha = alpha

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        k = self.kind
        if k == "relu":
            y = np.maximum(x, 0)
            self._cache = x
        elif k == "leaky_relu":
            y = np.where(x > 0, x, self.slope * x)
            self._cache = x
        elif k == "elu":
            y = np.where(x > 0, x, self.alpha * np.expm1(np.minimum(x, 0)))
            self._cache = (x, y)
        elif k == "sigmoid":
            y = _sigmoid(x)
            self._cache = y
        else:  # tanh
            y = np.tanh(x)
            self._cache = y
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        k = self.kind
        if k == "relu":
            return dy * (self._cache > 0)
        if k == "leaky_relu":
            x = self._cache
            return dy * np.where(x > 0, 1.0, self.slope).astype(dy.dtype)
        if k == "elu":
            x, y = self._cache
            return dy * np.where(x > 0, 1.0, y + self.alpha)
        if k == "sigmoid":
            y = self._cache
            return dy * y * (1 - y)
        y = self._cache
        return dy * (1 - y ** 2)

    def label(self):
        if self.kind == "leaky_relu":
            return f"leaky_relu({self.slope})"
        if self.kind == "elu":
            return f"elu({self.alpha})"
        return self.kind
