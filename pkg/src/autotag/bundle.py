"""Per-image feature bundle handed to the attention mechanism.

Attention weighs *sets* of feature items, so the single fused low-level
vector and the single high-level vector are each sliced into a fixed
number of contiguous equal-length chunks (zero-padded at the tail when
the length is not divisible).

Raw singular-value features span several orders of magnitude and
saturate every sigmoid in the model, so bundles apply a signed log
compression first; it is monotone, stateless and keeps zero at zero."""

from dataclasses import dataclass

import numpy as np

DEFAULT_ITEM_COUNT = 8


def compress_features(vector):
    """sign(v) * log1p(|v|): tames long-tailed magnitudes."""
    vector = np.asarray(vector, dtype=float)
    return np.sign(vector) * np.log1p(np.abs(vector))


def split_items(vector, count=DEFAULT_ITEM_COUNT):
    """Slice a 1-D vector into `count` equal-length rows."""
    vector = np.asarray(vector, dtype=float)
    item_len = -(-vector.size // count)
    padded = np.zeros(count * item_len)
    padded[:vector.size] = vector
    return padded.reshape(count, item_len)


@dataclass
class FeatureBundle:
    ll: np.ndarray        # compressed fused low-level vector
    hl: np.ndarray        # compressed high-level vector
    ll_items: np.ndarray  # (item_count, ll_item_len)
    hl_items: np.ndarray  # (item_count, hl_item_len)


def make_bundle(ll_vector, hl_vector, item_count=DEFAULT_ITEM_COUNT,
                compress=True):
    ll = compress_features(ll_vector) if compress else np.asarray(
        ll_vector, dtype=float)
    hl = compress_features(hl_vector) if compress else np.asarray(
        hl_vector, dtype=float)
    return FeatureBundle(ll=ll, hl=hl,
                         ll_items=split_items(ll, item_count),
                         hl_items=split_items(hl, item_count))
