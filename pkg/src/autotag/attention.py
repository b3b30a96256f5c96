"""Attention over low- and high-level feature items.

Scores come from a shared one-hidden-layer scorer conditioned on the
previous decoder state; per-family softmaxes are then blended by a
learnable balance coefficient tau. Two blending modes exist:

* ``normalized``: low weights scale by tau, high weights by (1 - tau),
  so all weights sum to exactly 1.
* ``literal``: high weights scale by (1/2 - tau) instead, so the total
  is 1/2 and tau must stay in [0, 1/2].

Items of the two families have different lengths, so separate score
projections are used, and both families are linearly mapped to a shared
context dimension before the weighted sum.
"""

from dataclasses import dataclass

import numpy as np

MODES = ("normalized", "literal")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def softmax(x):
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass
class AttentionParams:
    gamma: np.ndarray      # (score_dim,) projection of scorer activations
    w_hidden: np.ndarray   # (score_dim, hidden_dim)
    w_low: np.ndarray      # (score_dim, ll_item_len)
    w_high: np.ndarray     # (score_dim, hl_item_len)
    bias: np.ndarray       # (score_dim,)
    tau_logit: np.ndarray  # () scalar; tau = sigmoid(tau_logit)
    proj_low: np.ndarray   # (context_dim, ll_item_len)
    proj_high: np.ndarray  # (context_dim, hl_item_len)

    @property
    def tau(self):
        return float(sigmoid(self.tau_logit))

    def named(self, prefix="attention"):
        return [
            (f"{prefix}.gamma", self.gamma),
            (f"{prefix}.w_hidden", self.w_hidden),
            (f"{prefix}.w_low", self.w_low),
            (f"{prefix}.w_high", self.w_high),
            (f"{prefix}.bias", self.bias),
            (f"{prefix}.tau_logit", self.tau_logit),
            (f"{prefix}.proj_low", self.proj_low),
            (f"{prefix}.proj_high", self.proj_high),
        ]


def init_attention(rng, hidden_dim, ll_item_len, hl_item_len,
                   score_dim=64, context_dim=128, scale=0.08):
    u = lambda *shape: rng.uniform(-scale, scale, shape)
    return AttentionParams(
        gamma=u(score_dim),
        w_hidden=u(score_dim, hidden_dim),
        w_low=u(score_dim, ll_item_len),
        w_high=u(score_dim, hl_item_len),
        bias=np.zeros(score_dim),
        tau_logit=np.zeros(()),
        proj_low=u(context_dim, ll_item_len),
        proj_high=u(context_dim, hl_item_len))


def attention_scores(params, h_prev, ll_items, hl_items):
    """Unnormalised relevance of every item given the previous hidden
    state: gamma . sigmoid(W_h h + W_item x + b) per item."""
    base = params.w_hidden @ h_prev + params.bias
    act_low = sigmoid(ll_items @ params.w_low.T + base)
    act_high = sigmoid(hl_items @ params.w_high.T + base)
    return act_low @ params.gamma, act_high @ params.gamma


def attention_weights(zeta, rho, tau, mode="normalized"):
    """Blend per-family softmaxes of the raw scores into final weights."""
    if mode not in MODES:
        raise ValueError(f"unknown attention mode {mode!r}")
    if len(zeta) == 0 or len(rho) == 0:
        raise ValueError("need at least one item in each family")
    p = softmax(np.asarray(zeta, dtype=float))
    q = softmax(np.asarray(rho, dtype=float))
    if mode == "normalized":
        return tau * p, (1.0 - tau) * q
    if tau > 0.5:
        raise ValueError(f"literal mode requires tau <= 0.5, got {tau}")
    return tau * p, (0.5 - tau) * q


def attention_context(gammas, xis, ll_items, hl_items):
    """Weighted sum of (already projected) items."""
    ll_items = np.asarray(ll_items, dtype=float)
    hl_items = np.asarray(hl_items, dtype=float)
    if len(gammas) != len(ll_items) or len(xis) != len(hl_items):
        raise ValueError("weight/item count mismatch")
    return np.asarray(gammas) @ ll_items + np.asarray(xis) @ hl_items


def attention_forward(params, h_prev, ll_items, hl_items, mode="normalized"):
    """Full pass from previous hidden state to the fused context vector.
    Returns (context, cache) where the cache feeds the backward pass."""
    base = params.w_hidden @ h_prev + params.bias
    act_low = sigmoid(ll_items @ params.w_low.T + base)     # (nl, s)
    act_high = sigmoid(hl_items @ params.w_high.T + base)   # (nh, s)
    zeta = act_low @ params.gamma
    rho = act_high @ params.gamma
    tau = float(sigmoid(params.tau_logit))
    gammas, xis = attention_weights(zeta, rho, tau, mode)
    proj_ll = ll_items @ params.proj_low.T    # (nl, c)
    proj_hl = hl_items @ params.proj_high.T   # (nh, c)
    context = gammas @ proj_ll + xis @ proj_hl
    cache = dict(h_prev=h_prev, ll_items=ll_items, hl_items=hl_items,
                 act_low=act_low, act_high=act_high,
                 p=softmax(zeta), q=softmax(rho), tau=tau, mode=mode,
                 gammas=gammas, xis=xis, proj_ll=proj_ll, proj_hl=proj_hl)
    return context, cache


def _softmax_backward(p, dp):
    return p * (dp - float(p @ dp))


def attention_backward(params, cache, d_context):
    """Gradients of a scalar loss wrt every attention parameter and the
    previous hidden state, given the loss gradient at the context."""
    ll_items, hl_items = cache["ll_items"], cache["hl_items"]
    p, q, tau = cache["p"], cache["q"], cache["tau"]
    gammas, xis = cache["gammas"], cache["xis"]

    g = {name: np.zeros_like(val) for name, val in params.named("")}
    g = {k.lstrip("."): v for k, v in g.items()}

    g["proj_low"] += np.outer(d_context, gammas @ ll_items)
    g["proj_high"] += np.outer(d_context, xis @ hl_items)
    d_gammas = cache["proj_ll"] @ d_context
    d_xis = cache["proj_hl"] @ d_context

    hl_coeff = (1.0 - tau) if cache["mode"] == "normalized" else (0.5 - tau)
    d_tau = float(d_gammas @ p) - float(d_xis @ q)
    g["tau_logit"] += d_tau * tau * (1.0 - tau)
    d_p = tau * d_gammas
    d_q = hl_coeff * d_xis

    d_zeta = _softmax_backward(p, d_p)
    d_rho = _softmax_backward(q, d_q)

    act_low, act_high = cache["act_low"], cache["act_high"]
    g["gamma"] += act_low.T @ d_zeta + act_high.T @ d_rho
    d_act_low = np.outer(d_zeta, params.gamma)
    d_act_high = np.outer(d_rho, params.gamma)
    d_pre_low = d_act_low * act_low * (1.0 - act_low)
    d_pre_high = d_act_high * act_high * (1.0 - act_high)

    pre_sum = d_pre_low.sum(axis=0) + d_pre_high.sum(axis=0)
    g["w_hidden"] += np.outer(pre_sum, cache["h_prev"])
    g["bias"] += pre_sum
    g["w_low"] += d_pre_low.T @ ll_items
    g["w_high"] += d_pre_high.T @ hl_items
    d_h_prev = params.w_hidden.T @ pre_sum

    return g, d_h_prev
