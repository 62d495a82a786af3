"""Embedding -> Conv1D -> MaxPool -> BiLSTM -> softmax network in numpy."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.special import logsumexp

from . import layers

OUTPUT_MODES = ("final", "sequence")


@dataclass
class NeuralConfig:
    max_len: int = 100
    embed_dim: int = 100
    conv_filters: int = 128
    conv_kernel: int = 3
    pool_window: int = 5
    lstm_units: int = 100
    dropout: float = 0.2
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 32
    epochs: int = 30
    patience: int = 3
    seed: int = 0
    output_mode: str = "final"
    trainable_embedding: bool = True

    def __post_init__(self):
        for name in ("max_len", "embed_dim", "conv_filters", "conv_kernel", "pool_window",
                     "lstm_units", "batch_size", "epochs", "patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.output_mode not in OUTPUT_MODES:
            raise ValueError(f"output_mode must be one of {OUTPUT_MODES}")
        if self.pooled_len < 1:
            raise ValueError("max_len too short for the convolution width and pool window")

    @property
    def pooled_len(self):
        return (self.max_len - self.conv_kernel + 1) // self.pool_window

    @property
    def head_dim(self):
        h2 = 2 * self.lstm_units
        return h2 if self.output_mode == "final" else h2 * self.pooled_len

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _orthogonal(rng, rows, cols):
    a = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    return q if rows >= cols else q.T


class CNNBiLSTM:
    """Parameters plus forward and backward passes.

    ``params`` maps names to float64 arrays. The backward pass needs the
    cache of the most recent ``forward(..., keep_cache=True)`` call.
    """

    PARAM_ORDER = ("embedding", "conv_W", "conv_b", "fwd_Wx", "fwd_Wh", "fwd_b",
                   "bwd_Wx", "bwd_Wh", "bwd_b", "out_W", "out_b")

    def __init__(self, config: NeuralConfig, n_classes: int, params: dict):
        self.config = config
        self.n_classes = n_classes
        self.params = params
        self._cache = None
        self._check_shapes()

    @classmethod
    def initialize(cls, config: NeuralConfig, vocab_size: int, n_classes: int,
                   embedding: np.ndarray | None = None, seed=None):
        """Fresh parameters; ``vocab_size`` counts real tokens (rows = V + 2)."""
        rng = np.random.default_rng(config.seed if seed is None else seed)
        E, F, k, H = config.embed_dim, config.conv_filters, config.conv_kernel, config.lstm_units
        if embedding is None:
            embedding = rng.uniform(-0.05, 0.05, size=(vocab_size + 2, E))
            embedding[0] = 0.0
        else:
            embedding = np.array(embedding, dtype=np.float64)
        p = {"embedding": embedding,
             "conv_W": _glorot(rng, (k, E, F), k * E, k * F),
             "conv_b": np.zeros(F)}
        for d in ("fwd", "bwd"):
            p[f"{d}_Wx"] = _glorot(rng, (F, 4 * H), F, 4 * H)
            p[f"{d}_Wh"] = _orthogonal(rng, H, 4 * H)
            b = np.zeros(4 * H)
            b[H:2 * H] = 1.0
            p[f"{d}_b"] = b
        p["out_W"] = _glorot(rng, (config.head_dim, n_classes), config.head_dim, n_classes)
        p["out_b"] = np.zeros(n_classes)
        return cls(config, n_classes, p)

    def _check_shapes(self):
        c = self.config
        E, F, k, H = c.embed_dim, c.conv_filters, c.conv_kernel, c.lstm_units
        expected = {
            "conv_W": (k, E, F), "conv_b": (F,),
            "fwd_Wx": (F, 4 * H), "fwd_Wh": (H, 4 * H), "fwd_b": (4 * H,),
            "bwd_Wx": (F, 4 * H), "bwd_Wh": (H, 4 * H), "bwd_b": (4 * H,),
            "out_W": (c.head_dim, self.n_classes), "out_b": (self.n_classes,),
        }
        if set(self.params) != set(self.PARAM_ORDER):
            raise ValueError(f"parameter set mismatch: {sorted(self.params)}")
        emb = self.params["embedding"]
        if emb.ndim != 2 or emb.shape[1] != E:
            raise ValueError(f"embedding shape {emb.shape} does not match embed_dim={E}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ValueError(f"{name} has shape {self.params[name].shape}, expected {shape}")

    @property
    def vocab_rows(self):
        return self.params["embedding"].shape[0]

    def forward(self, ids, train=False, rng=None, keep_cache=False):
        """Class probabilities for a batch of id sequences of length ``max_len``."""
        ids = np.asarray(ids)
        c, p = self.config, self.params
        if ids.ndim != 2 or ids.shape[1] != c.max_len:
            raise ValueError(f"expected id batch of shape (n, {c.max_len}), got {ids.shape}")
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_rows):
            raise ValueError("token id outside the embedding table")
        X0 = p["embedding"][ids]
        Z, cols = layers.conv1d_forward(X0, p["conv_W"], p["conv_b"])
        A = np.maximum(Z, 0.0)
        P, arg = layers.maxpool_forward(A, c.pool_window)
        Hf, cache_f = layers.lstm_forward(P, p["fwd_Wx"], p["fwd_Wh"], p["fwd_b"])
        Hb_rev, cache_b = layers.lstm_forward(P[:, ::-1], p["bwd_Wx"], p["bwd_Wh"], p["bwd_b"])
        if c.output_mode == "final":
            feats = np.concatenate([Hf[:, -1], Hb_rev[:, -1]], axis=1)
        else:
            feats = np.concatenate([Hf, Hb_rev[:, ::-1]], axis=2).reshape(len(ids), -1)
        mask = None
        if train and c.dropout > 0:
            if rng is None:
                raise ValueError("train mode with dropout needs an rng")
            keep = 1.0 - c.dropout
            mask = (rng.random(feats.shape) < keep) / keep
            feats = feats * mask
        logits = feats @ p["out_W"] + p["out_b"]
        log_probs = logits - logsumexp(logits, axis=1, keepdims=True)
        if keep_cache:
            self._cache = dict(ids=ids, X0=X0, Z=Z, cols=cols, arg=arg, P=P,
                               cache_f=cache_f, cache_b=cache_b, mask=mask, feats=feats,
                               log_probs=log_probs)
        return np.exp(log_probs)

    def loss(self, ids, targets, train=False, rng=None, keep_cache=False):
        probs = self.forward(ids, train=train, rng=rng, keep_cache=keep_cache)
        lp = self._cache["log_probs"] if keep_cache else np.log(np.maximum(probs, 1e-300))
        return float(-lp[np.arange(len(targets)), targets].mean())

    def backward(self, targets) -> dict:
        """Gradients of the mean cross-entropy of the cached forward pass."""
        if self._cache is None:
            raise RuntimeError("backward() needs a preceding forward(..., keep_cache=True)")
        c, p, s = self.config, self.params, self._cache
        targets = np.asarray(targets)
        B = len(targets)
        H = c.lstm_units
        T = c.pooled_len
        dlogits = np.exp(s["log_probs"])
        dlogits[np.arange(B), targets] -= 1.0
        dlogits /= B
        g = {"out_W": s["feats"].T @ dlogits, "out_b": dlogits.sum(axis=0)}
        dfeats = dlogits @ p["out_W"].T
        if s["mask"] is not None:
            dfeats = dfeats * s["mask"]
        dHf = np.zeros((B, T, H))
        dHb_rev = np.zeros((B, T, H))
        if c.output_mode == "final":
            dHf[:, -1] = dfeats[:, :H]
            dHb_rev[:, -1] = dfeats[:, H:]
        else:
            d = dfeats.reshape(B, T, 2 * H)
            dHf[:] = d[:, :, :H]
            dHb_rev[:] = d[:, ::-1, H:]
        P = s["P"]
        dPf, g["fwd_Wx"], g["fwd_Wh"], g["fwd_b"] = layers.lstm_backward(
            dHf, P, p["fwd_Wx"], p["fwd_Wh"], s["cache_f"])
        dPb_rev, g["bwd_Wx"], g["bwd_Wh"], g["bwd_b"] = layers.lstm_backward(
            dHb_rev, P[:, ::-1], p["bwd_Wx"], p["bwd_Wh"], s["cache_b"])
        dP = dPf + dPb_rev[:, ::-1]
        L = s["Z"].shape[1]
        dA = layers.maxpool_backward(dP, s["arg"], c.pool_window, L)
        dZ = dA * (s["Z"] > 0)
        dX0, g["conv_W"], g["conv_b"] = layers.conv1d_backward(dZ, s["cols"], p["conv_W"], c.max_len)
        demb = np.zeros_like(p["embedding"])
        if c.trainable_embedding:
            np.add.at(demb, s["ids"], dX0)
            demb[0] = 0.0
        g["embedding"] = demb
        return g

    def predict_proba(self, ids, batch_size=256):
        ids = np.asarray(ids)
        out = [self.forward(ids[i:i + batch_size]) for i in range(0, len(ids), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.n_classes))

    def copy_params(self):
        return {k: v.copy() for k, v in self.params.items()}

    def export_params(self):
        return {name: {"shape": list(self.params[name].shape),
                       "data": self.params[name].ravel().tolist()}
                for name in self.PARAM_ORDER}

    @staticmethod
    def import_params(d):
        return {name: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"])
                for name, v in d.items()}


def forward(model: CNNBiLSTM, batch, train_mode=False, rng=None):
    return model.forward(batch, train=train_mode, rng=rng)


def backward(model: CNNBiLSTM, batch, targets, train_mode=False, rng=None):
    """Forward with cached state, then gradients for every parameter."""
    model.forward(batch, train=train_mode, rng=rng, keep_cache=True)
    return model.backward(targets)
