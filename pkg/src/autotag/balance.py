"""Data equilibrium: log-entropy coefficient matrix and the balanced
feed-forward network that supplies the first annotation tag.

For a binary annotation matrix the log-entropy expression collapses to
``1 - ln(T_j)/ln(N)`` on annotated entries: a keyword used once keeps
full weight 1, a keyword present in every image drops to 0. Training
clamps those zeros to a small floor so no target is ever completely
silent, but the stored matrix keeps the exact values.
"""

from dataclasses import dataclass, field

import numpy as np

from .attention import sigmoid
from .errors import DataError, DivergenceError

DEFAULT_WEIGHT_FLOOR = 0.01


def logentropy_weights(phi):
    """N x M equilibrium matrix from a binary annotation matrix.

    The closed form below is exact for 0/1 entries (the entropy
    summation collapses because ln 1 = 0 and zero entries vanish)."""
    phi = np.asarray(phi, dtype=float)
    if not np.all((phi == 0) | (phi == 1)):
        raise DataError("annotation matrix entries must be 0 or 1")
    n = phi.shape[0]
    if n < 2:
        raise DataError(f"need at least 2 images, got {n}")
    totals = phi.sum(axis=0)
    if np.any(totals < 1):
        raise DataError("every keyword must occur at least once")
    column = 1.0 - np.log(totals) / np.log(n)
    return phi * column


@dataclass
class BalancedNet:
    """Sigmoid feed-forward stack; decoding reuses transposed encoder
    weights (free decoder biases, since a transposed bias vector has no
    meaning when layer widths differ)."""

    weights: list                 # per layer, (out_dim, in_dim)
    biases: list                  # per layer, (out_dim,)
    decoder_biases: list = field(default=None)

    def __post_init__(self):
        if len(self.weights) < 1:
            raise DataError("network needs at least one layer")
        if self.decoder_biases is None:
            self.decoder_biases = [np.zeros(w.shape[1])
                                   for w in reversed(self.weights)]

    @property
    def depth(self):
        return len(self.weights)

    def named(self, prefix="balance"):
        out = []
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"{prefix}.w{l}", w))
            out.append((f"{prefix}.b{l}", b))
        for l, b in enumerate(self.decoder_biases):
            out.append((f"{prefix}.db{l}", b))
        return out


def init_balanced_net(rng, layer_dims, scale=0.08):
    """Network with dims like (input, hidden..., output)."""
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        weights.append(rng.uniform(-scale, scale, (d_out, d_in)))
        biases.append(np.zeros(d_out))
    return BalancedNet(weights=weights, biases=biases)


def _forward(net, x):
    """All layer pre-activations and activations (activations[0] = x)."""
    acts = [np.asarray(x, dtype=float)]
    pres = []
    for w, b in zip(net.weights, net.biases):
        pres.append(w @ acts[-1] + b)
        acts.append(sigmoid(pres[-1]))
    return pres, acts


def encode(net, k):
    """Chained sigmoid encoding of an input vector."""
    if len(k) != net.weights[0].shape[1]:
        raise DataError(
            f"input length {len(k)} != expected {net.weights[0].shape[1]}")
    return _forward(net, k)[1][-1]


def decode(net, h, input_range="unit"):
    """Map a hidden vector back through transposed encoder weights.
    The output layer is sigmoid for inputs living in [0, 1] and affine
    for real-valued inputs."""
    if input_range not in ("unit", "real"):
        raise DataError(f"unknown input_range {input_range!r}")
    out = np.asarray(h, dtype=float)
    layers = list(zip(reversed(net.weights), net.decoder_biases))
    for l, (w, b) in enumerate(layers):
        if w.shape[0] != len(out):
            raise DataError("hidden vector does not match decoder layer")
        out = w.T @ out + b
        if l < len(layers) - 1 or input_range == "unit":
            out = sigmoid(out)
    return out


def predict(net, features):
    """Keyword scores for a batch (rows) or single feature vector."""
    feats = np.atleast_2d(np.asarray(features, dtype=float))
    out = feats
    for w, b in zip(net.weights, net.biases):
        out = sigmoid(out @ w.T + b)
    return out


def first_tag(net, features):
    """Most likely keyword index; ties break to the lowest index."""
    scores = predict(net, features)[0]
    return int(np.argmax(scores))


def clamped_weights(phi, equilibrium, floor=DEFAULT_WEIGHT_FLOOR):
    """Per-entry loss weights: floored equilibrium value on positive
    entries, 1 on negatives."""
    phi = np.asarray(phi, dtype=float)
    return np.where(phi > 0, np.maximum(equilibrium, floor), 1.0)


def balanced_loss_and_grads(net, features, phi, entry_weights):
    """Mean (over images) of the weighted per-keyword binary
    cross-entropy, with analytic gradients per layer."""
    feats = np.atleast_2d(np.asarray(features, dtype=float))
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    n = feats.shape[0]

    acts = [feats]
    for w, b in zip(net.weights, net.biases):
        acts.append(sigmoid(acts[-1] @ w.T + b))
    out = acts[-1]

    eps = 1e-12
    per_entry = -(phi * np.log(out + eps)
                  + (1.0 - phi) * np.log(1.0 - out + eps))
    loss = float(np.sum(entry_weights * per_entry)) / n

    grads = {}
    delta = entry_weights * (out - phi) / n    # (n, M) at the last pre-act
    for l in range(net.depth - 1, -1, -1):
        grads[f"w{l}"] = delta.T @ acts[l]
        grads[f"b{l}"] = delta.sum(axis=0)
        if l > 0:
            back = delta @ net.weights[l]
            delta = back * acts[l] * (1.0 - acts[l])
    return loss, grads


def train_balanced(net, features, phi, equilibrium, epochs, lr,
                   weight_floor=DEFAULT_WEIGHT_FLOOR):
    """Plain full-batch gradient descent on the balanced objective.
    Returns the loss curve (epoch 0 is the pre-update loss)."""
    entry_weights = clamped_weights(phi, equilibrium, weight_floor)
    losses = []
    for epoch in range(epochs):
        loss, grads = balanced_loss_and_grads(net, features, phi, entry_weights)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite balanced loss at epoch {epoch}")
        losses.append(loss)
        for l in range(net.depth):
            net.weights[l] -= lr * grads[f"w{l}"]
            net.biases[l] -= lr * grads[f"b{l}"]
    return losses


def train_autoencoder(net, samples, epochs, lr, input_range="unit"):
    """Reconstruction training with tied decoder weights; tracks the
    mean absolute reconstruction error while descending its squared
    counterpart."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    curve = []
    for epoch in range(epochs):
        total_abs = 0.0
        grads_w = [np.zeros_like(w) for w in net.weights]
        grads_db = [np.zeros_like(b) for b in net.decoder_biases]
        grads_b = [np.zeros_like(b) for b in net.biases]
        for x in samples:
            pres, acts = _forward(net, x)
            # decoder forward, keeping intermediates
            dec_in = [acts[-1]]
            dec_pre = []
            layers = list(zip(reversed(net.weights), net.decoder_biases))
            for l, (w, b) in enumerate(layers):
                dec_pre.append(w.T @ dec_in[-1] + b)
                if l < len(layers) - 1 or input_range == "unit":
                    dec_in.append(sigmoid(dec_pre[-1]))
                else:
                    dec_in.append(dec_pre[-1])
            recon = dec_in[-1]
            total_abs += float(np.mean(np.abs(x - recon)))

            d_out = 2.0 * (recon - x) / (len(x) * len(samples))
            # decoder backward (weights are the transposed encoder ones)
            d_vec = d_out
            for l in range(len(layers) - 1, -1, -1):
                w, _ = layers[l]
                if l < len(layers) - 1 or input_range == "unit":
                    d_vec = d_vec * dec_in[l + 1] * (1.0 - dec_in[l + 1])
                enc_idx = net.depth - 1 - l
                grads_w[enc_idx] += np.outer(dec_in[l], d_vec)
                grads_db[l] += d_vec
                d_vec = w @ d_vec
            # encoder backward
            for l in range(net.depth - 1, -1, -1):
                d_vec = d_vec * acts[l + 1] * (1.0 - acts[l + 1])
                grads_w[l] += np.outer(d_vec, acts[l])
                grads_b[l] += d_vec
                d_vec = net.weights[l].T @ d_vec
        curve.append(total_abs / len(samples))
        for l in range(net.depth):
            net.weights[l] -= lr * grads_w[l]
            net.biases[l] -= lr * grads_b[l]
        for l in range(len(grads_db)):
            net.decoder_biases[l] -= lr * grads_db[l]
    return curve
