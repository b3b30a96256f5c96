"""Recurrent tag annotator.

Each decoding step recomputes the attention context from the previous
hidden state, concatenates it with a projection of the previously
emitted tag's word vector (a learned start token at step 1), advances
the update/reset gated cell and projects the new state to vocabulary
logits. The first emission comes from the balanced feed-forward
predictor; later steps take the argmax over logits masked to exclude
already-emitted tags and (from step 2 on) anything outside the
candidate set proposed by the tag generator.

Training is teacher-forced full-batch gradient descent with
backpropagation through time across the cell, the output projection,
the embedding projection and every attention parameter including the
balance coefficient.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .attention import (AttentionParams, attention_backward,
                        attention_forward, init_attention, sigmoid)
from .balance import BalancedNet, first_tag
from .bundle import make_bundle
from .embeddings import generate_candidates
from .errors import DataError, DivergenceError

log = logging.getLogger(__name__)

GRAD_CLIP_NORM = 5.0


@dataclass
class CellParams:
    """Update/reset gated recurrence over [h_prev, x] (no gate biases)."""

    w_update: np.ndarray  # (H, H + D)
    w_reset: np.ndarray   # (H, H + D)
    w_cand: np.ndarray    # (H, H + D)

    @property
    def hidden_dim(self):
        return self.w_update.shape[0]

    @property
    def input_dim(self):
        return self.w_update.shape[1] - self.w_update.shape[0]

    def named(self, prefix="cell"):
        return [(f"{prefix}.w_update", self.w_update),
                (f"{prefix}.w_reset", self.w_reset),
                (f"{prefix}.w_cand", self.w_cand)]


def init_cell(rng, hidden_dim, input_dim, scale=0.08):
    shape = (hidden_dim, hidden_dim + input_dim)
    return CellParams(w_update=rng.uniform(-scale, scale, shape),
                      w_reset=rng.uniform(-scale, scale, shape),
                      w_cand=rng.uniform(-scale, scale, shape))


def cell_step(cell, h_prev, x):
    """One recurrence step:
    z = sig(Wz [h, x]); r = sig(Wr [h, x]);
    h~ = tanh(W [r*h, x]); h' = (1 - z)*h + z*h~."""
    return cell_forward(cell, h_prev, x)[0]


def cell_forward(cell, h_prev, x):
    if len(h_prev) + len(x) != cell.w_update.shape[1]:
        raise DataError("cell input dimensions do not match parameters")
    u = np.concatenate([h_prev, x])
    z = sigmoid(cell.w_update @ u)
    r = sigmoid(cell.w_reset @ u)
    uh = np.concatenate([r * h_prev, x])
    h_tilde = np.tanh(cell.w_cand @ uh)
    h_next = (1.0 - z) * h_prev + z * h_tilde
    cache = dict(h_prev=h_prev, x=x, u=u, z=z, r=r, uh=uh, h_tilde=h_tilde)
    return h_next, cache


def cell_backward(cell, cache, d_h_next):
    h_prev, z, r, h_tilde = cache["h_prev"], cache["z"], cache["r"], cache["h_tilde"]
    hid = len(h_prev)

    d_z = d_h_next * (h_tilde - h_prev)
    d_h_tilde = d_h_next * z
    d_h_prev = d_h_next * (1.0 - z)

    d_pre_cand = d_h_tilde * (1.0 - h_tilde ** 2)
    g_w_cand = np.outer(d_pre_cand, cache["uh"])
    d_uh = cell.w_cand.T @ d_pre_cand
    d_rh = d_uh[:hid]
    d_x = d_uh[hid:].copy()
    d_r = d_rh * h_prev
    d_h_prev = d_h_prev + d_rh * r

    d_pre_reset = d_r * r * (1.0 - r)
    d_pre_update = d_z * z * (1.0 - z)
    g_w_reset = np.outer(d_pre_reset, cache["u"])
    g_w_update = np.outer(d_pre_update, cache["u"])
    d_u = cell.w_reset.T @ d_pre_reset + cell.w_update.T @ d_pre_update
    d_h_prev = d_h_prev + d_u[:hid]
    d_x = d_x + d_u[hid:]

    grads = {"w_update": g_w_update, "w_reset": g_w_reset, "w_cand": g_w_cand}
    return grads, d_h_prev, d_x


@dataclass
class AnnotationModel:
    attention: AttentionParams
    cell: CellParams
    out_weight: np.ndarray  # (M, H)
    out_bias: np.ndarray    # (M,)
    emb_proj: np.ndarray    # (E, emb_dim)
    start_token: np.ndarray  # (E,)
    balance: BalancedNet
    tau_mode: str = "normalized"

    def named_parameters(self):
        params = list(self.attention.named("attention"))
        params += self.cell.named("cell")
        params += [("out_weight", self.out_weight), ("out_bias", self.out_bias),
                   ("emb_proj", self.emb_proj), ("start_token", self.start_token)]
        params += self.balance.named("balance")
        return params


@dataclass
class ModelDims:
    vocab_size: int
    ll_item_len: int
    hl_item_len: int
    emb_dim: int
    hidden_dim: int = 128
    context_dim: int = 128
    score_dim: int = 64
    emb_proj_dim: int = 64
    item_count: int = 8
    balance_hidden: tuple = (256, 64)
    ll_dim: int = 0  # fused low-level length (balance input)


def init_model(rng, dims, tau_mode="normalized", scale=0.08):
    from .balance import init_balanced_net
    attention = init_attention(
        rng, hidden_dim=dims.hidden_dim, ll_item_len=dims.ll_item_len,
        hl_item_len=dims.hl_item_len, score_dim=dims.score_dim,
        context_dim=dims.context_dim, scale=scale)
    cell = init_cell(rng, dims.hidden_dim,
                     dims.context_dim + dims.emb_proj_dim, scale)
    balance = init_balanced_net(
        rng, (dims.ll_dim, *dims.balance_hidden, dims.vocab_size), scale)
    return AnnotationModel(
        attention=attention, cell=cell,
        out_weight=rng.uniform(-scale, scale, (dims.vocab_size, dims.hidden_dim)),
        out_bias=np.zeros(dims.vocab_size),
        emb_proj=rng.uniform(-scale, scale, (dims.emb_proj_dim, dims.emb_dim)),
        start_token=rng.uniform(-scale, scale, dims.emb_proj_dim),
        balance=balance, tau_mode=tau_mode)


def default_candidate_count(vocab_size):
    return max(20, vocab_size // 4)


def _keyword_embedding(store, vocab, idx):
    word = vocab.word(idx)
    vec = store.vectors.get(word)
    if vec is None:
        return np.zeros(store.dim)
    return vec


def _step_forward(model, h_prev, bundle, emb_input):
    """One decoder step up to the logits; returns (h_next, logits, caches)."""
    context, att_cache = attention_forward(
        model.attention, h_prev, bundle.ll_items, bundle.hl_items,
        model.tau_mode)
    x = np.concatenate([context, emb_input])
    h_next, cell_cache = cell_forward(model.cell, h_prev, x)
    logits = model.out_weight @ h_next + model.out_bias
    return h_next, logits, (att_cache, cell_cache)


def decode_tags(model, bundle, store, vocab, keyword_weights,
                tag_count=5, candidate_count=None, frequencies=None):
    """Greedy five-tag annotation of one image."""
    m = len(vocab)
    if m < tag_count:
        log.warning("vocabulary has %d keywords, annotating with all of them", m)
        tag_count = m
    if candidate_count is None:
        candidate_count = default_candidate_count(m)

    h = np.zeros(model.cell.hidden_dim)
    emitted = []
    for t in range(tag_count):
        if t == 0:
            emb_input = model.start_token
        else:
            emb = _keyword_embedding(store, vocab, emitted[-1])
            emb_input = model.emb_proj @ emb
        h, logits, _ = _step_forward(model, h, bundle, emb_input)

        if t == 0:
            emitted.append(first_tag(model.balance, bundle.ll))
            continue

        masked = logits.copy()
        masked[emitted] = -np.inf
        try:
            cand = generate_candidates(emitted, store, vocab, keyword_weights,
                                       candidate_count, frequencies)
            allowed = set(cand.indices())
        except DataError:
            allowed = None
        if allowed:
            keep = masked.copy()
            block = [j for j in range(m) if j not in allowed]
            keep[block] = -np.inf
            if np.any(np.isfinite(keep)):
                masked = keep
        emitted.append(int(np.argmax(masked)))
    return emitted


def sequence_loss_and_grads(model, bundle, targets, target_weights,
                            store, vocab):
    """Teacher-forced weighted cross-entropy over one image's target
    tag sequence, with gradients for every model parameter reachable
    from the sequence loss (the balanced predictor trains separately).

    targets: keyword indices, rarest first. target_weights: matching
    per-step loss weights."""
    h = np.zeros(model.cell.hidden_dim)
    steps = []
    loss = 0.0
    for t, y in enumerate(targets):
        if t == 0:
            emb = None
            emb_input = model.start_token
        else:
            emb = _keyword_embedding(store, vocab, targets[t - 1])
            emb_input = model.emb_proj @ emb
        h_next, logits, (att_cache, cell_cache) = _step_forward(
            model, h, bundle, emb_input)
        shifted = logits - logits.max()
        log_probs = shifted - np.log(np.sum(np.exp(shifted)))
        loss -= target_weights[t] * log_probs[y]
        steps.append(dict(h_prev=h, h_next=h_next, emb=emb,
                          att_cache=att_cache, cell_cache=cell_cache,
                          probs=np.exp(log_probs), y=y, wgt=target_weights[t]))
        h = h_next

    grads = {name: np.zeros_like(arr) for name, arr in model.named_parameters()}
    d_h = np.zeros_like(h)
    for t in range(len(steps) - 1, -1, -1):
        st = steps[t]
        d_logits = st["wgt"] * st["probs"]
        d_logits[st["y"]] -= st["wgt"]
        grads["out_weight"] += np.outer(d_logits, st["h_next"])
        grads["out_bias"] += d_logits
        d_h = d_h + model.out_weight.T @ d_logits

        cell_grads, d_h_prev, d_x = cell_backward(
            model.cell, st["cell_cache"], d_h)
        for key, val in cell_grads.items():
            grads[f"cell.{key}"] += val

        ctx_dim = model.attention.proj_low.shape[0]
        d_context = d_x[:ctx_dim]
        d_emb_input = d_x[ctx_dim:]
        if t == 0:
            grads["start_token"] += d_emb_input
        else:
            grads["emb_proj"] += np.outer(d_emb_input, st["emb"])

        att_grads, d_h_att = attention_backward(
            model.attention, st["att_cache"], d_context)
        for key, val in att_grads.items():
            grads[f"attention.{key}"] += val

        d_h = d_h_prev + d_h_att
    return loss, grads


def rarest_first_targets(record, frequencies, tag_count=5):
    """Ground-truth tags ordered by ascending frequency (ties by
    index), truncated to the protocol length."""
    ordered = sorted(record.tag_indices, key=lambda j: (frequencies[j], j))
    return ordered[:tag_count]


def clip_gradients(grads, max_norm=GRAD_CLIP_NORM):
    total = np.sqrt(sum(float(np.sum(g ** 2)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def train_decoder(model, dataset, bundles, entry_weights, store,
                  epochs, lr, tag_count=5):
    """Teacher-forced training with per-image updates in fixed manifest
    order (deterministic and far faster to converge than full-batch on
    desk-scale sets). bundles maps image id -> FeatureBundle;
    entry_weights is the clamped N x M loss-weight matrix (all ones for
    un-balanced training). Returns the per-epoch mean running loss."""
    from .dataset import tag_frequency
    frequencies = tag_frequency(dataset)
    per_image = []
    for i, rec in enumerate(dataset.records):
        targets = rarest_first_targets(rec, frequencies, tag_count)
        weights = [entry_weights[i, y] for y in targets]
        per_image.append((rec.id, targets, weights))

    params = dict(model.named_parameters())
    losses = []
    for epoch in range(epochs):
        epoch_loss = 0.0
        for image_id, targets, weights in per_image:
            try:
                loss, grads = sequence_loss_and_grads(
                    model, bundles[image_id], targets, weights, store,
                    dataset.vocabulary)
            except ValueError as exc:
                # e.g. literal-mode tau driven past 1/2: the parameters
                # left their valid domain
                raise DivergenceError(
                    f"epoch {epoch}, image {image_id!r}: {exc}") from exc
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, image {image_id!r}")
            epoch_loss += loss
            clip_gradients(grads)
            for name in params:
                params[name] -= lr * grads[name]
        losses.append(epoch_loss / len(per_image))
    return losses
