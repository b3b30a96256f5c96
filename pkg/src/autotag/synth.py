"""Procedural skewed dataset for self-contained runs.

Images are small RGB canvases with colored geometric primitives drawn
on them; each keyword names one primitive. Keyword frequencies follow a
geometric ladder between the most and least frequent tag (ratio
``skew``), which reproduces the long-tail shape of real annotation
dictionaries at desk scale. Everything derives from one seed, so two
runs with the same settings produce byte-identical files.
"""

import os

import numpy as np
from PIL import Image, ImageDraw

from .embeddings import save_vectors
from .errors import ConfigError

_SHAPES = [
    ("circle", (219, 68, 55)),
    ("square", (66, 133, 244)),
    ("triangle", (244, 180, 0)),
    ("diamond", (15, 157, 88)),
    ("cross", (171, 71, 188)),
    ("ring", (0, 172, 193)),
    ("hbar", (255, 112, 67)),
    ("vbar", (158, 157, 36)),
    ("dot", (92, 107, 192)),
    ("wedge", (240, 98, 146)),
    ("frame", (0, 137, 123)),
    ("stripe", (141, 110, 99)),
]


def keyword_table(count):
    """(name, color) pairs for `count` keywords."""
    table = []
    for i in range(count):
        name, color = _SHAPES[i % len(_SHAPES)]
        if i >= len(_SHAPES):
            name = f"{name}{i // len(_SHAPES) + 1}"
        table.append((name, color))
    return table


def skewed_counts(n_images, n_keywords, skew):
    """Images-per-keyword ladder from ~80% of the set down by `skew`."""
    top = max(1, round(0.8 * n_images))
    if n_keywords == 1:
        return [top]
    counts = []
    for k in range(n_keywords):
        frac = skew ** (-k / (n_keywords - 1))
        counts.append(min(n_images, max(1, round(top * frac))))
    return counts


def _draw_primitive(draw, kind, color, cx, cy, r):
    box = (cx - r, cy - r, cx + r, cy + r)
    if kind.startswith("circle") or kind.startswith("dot"):
        draw.ellipse(box, fill=color)
    elif kind.startswith("square"):
        draw.rectangle(box, fill=color)
    elif kind.startswith("triangle"):
        draw.polygon([(cx, cy - r), (cx - r, cy + r), (cx + r, cy + r)],
                     fill=color)
    elif kind.startswith("diamond"):
        draw.polygon([(cx, cy - r), (cx - r, cy), (cx, cy + r), (cx + r, cy)],
                     fill=color)
    elif kind.startswith("cross"):
        third = max(1, r // 3)
        draw.rectangle((cx - third, cy - r, cx + third, cy + r), fill=color)
        draw.rectangle((cx - r, cy - third, cx + r, cy + third), fill=color)
    elif kind.startswith("ring"):
        draw.ellipse(box, outline=color, width=max(1, r // 3))
    elif kind.startswith("hbar"):
        draw.rectangle((cx - r, cy - r // 3, cx + r, cy + r // 3), fill=color)
    elif kind.startswith("vbar"):
        draw.rectangle((cx - r // 3, cy - r, cx + r // 3, cy + r), fill=color)
    elif kind.startswith("wedge"):
        draw.polygon([(cx - r, cy - r), (cx + r, cy + r), (cx - r, cy + r)],
                     fill=color)
    elif kind.startswith("frame"):
        draw.rectangle(box, outline=color, width=max(1, r // 3))
    else:  # stripe
        draw.line((cx - r, cy - r, cx + r, cy + r), fill=color,
                  width=max(1, r // 2))


def generate(out_dir, seed, n_images=60, n_keywords=10, skew=16.0,
             image_size=64, embed_dim=16):
    """Write images/, manifest.txt and embeddings.txt under out_dir.
    Returns the manifest path."""
    if n_images < 2:
        raise ConfigError("need at least 2 synthetic images")
    if n_keywords < 1:
        raise ConfigError("need at least 1 synthetic keyword")
    if image_size < 32:
        raise ConfigError("synthetic images must be at least 32x32")

    rng = np.random.default_rng(seed)
    table = keyword_table(n_keywords)
    counts = skewed_counts(n_images, n_keywords, skew)

    tags_per_image = [set() for _ in range(n_images)]
    for k, count in enumerate(counts):
        for idx in rng.choice(n_images, size=count, replace=False):
            tags_per_image[idx].add(k)
    for tags in tags_per_image:
        if not tags:
            tags.add(0)

    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)

    manifest_lines = []
    for i, tags in enumerate(tags_per_image):
        bg = tuple(int(v) for v in rng.integers(16, 64, size=3))
        img = Image.new("RGB", (image_size, image_size), bg)
        draw = ImageDraw.Draw(img)
        for k in sorted(tags):
            name, color = table[k]
            margin = image_size // 8
            cx = int(rng.integers(margin, image_size - margin))
            cy = int(rng.integers(margin, image_size - margin))
            r = int(rng.integers(image_size // 10, image_size // 5))
            _draw_primitive(draw, name, color, cx, cy, r)
        rel = f"images/img_{i:04d}.png"
        img.save(os.path.join(out_dir, rel))
        manifest_lines.append(
            rel + "\t" + ",".join(table[k][0] for k in sorted(tags)))

    manifest_path = os.path.join(out_dir, "manifest.txt")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest_lines) + "\n")

    vectors = {}
    for name, _ in table:
        vec = rng.standard_normal(embed_dim)
        vectors[name] = vec / np.linalg.norm(vec)
    save_vectors(os.path.join(out_dir, "embeddings.txt"), vectors)
    return manifest_path
