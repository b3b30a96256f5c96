"""Run configuration: a flat key=value file, overridable per flag.

Every hyperparameter has a documented default so a synthetic run works
with nothing but a seed. The seed itself is mandatory: no command ever
runs with entropy-derived randomness.
"""

import os
from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass
class RunConfig:
    # paths (empty string = derive from out_dir where applicable)
    manifest: str = ""
    out_dir: str = ""
    embeddings: str = ""
    features_low: str = ""
    features_high: str = ""
    checkpoint: str = ""
    predictions: str = ""

    # feature extraction
    hl_source: str = "fallback"     # fallback | vgg16 | resnet50
    resize: int = 128
    wavelet_levels: int = 4
    q_levels: int = 16
    color_tolerance: float = 8.0
    item_count: int = 8
    workers: int = 1

    # model shape
    hidden_dim: int = 128
    context_dim: int = 128
    score_dim: int = 64
    emb_proj_dim: int = 64
    balance_hidden: tuple = (256, 64)

    # training
    seed: int = -1                  # mandatory; -1 means unset
    lr: float = 0.3
    epochs: int = 80
    balance_lr: float = 0.5
    balance_epochs: int = 300
    w_min: float = 0.01
    balanced: bool = True
    tau_mode: str = "normalized"    # normalized | literal

    # decoding
    tag_count: int = 5
    candidate_count: int = 0        # 0 = max(20, M // 4)

    # synthetic generator
    synth_images: int = 60
    synth_keywords: int = 10
    synth_skew: float = 16.0
    synth_size: int = 64
    synth_embed_dim: int = 16

    def require_seed(self):
        if self.seed < 0:
            raise ConfigError("seed is mandatory (set seed=<int>)")

    def require_out_dir(self):
        if not self.out_dir:
            raise ConfigError("out_dir is required for this command")

    def path(self, explicit, default_name):
        if explicit:
            return explicit
        self.require_out_dir()
        return os.path.join(self.out_dir, default_name)


def _coerce(name, kind, raw):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            raw = raw.strip()
            return tuple(int(p) for p in raw.split(",") if p.strip()) if raw else ()
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_file(path):
    """key=value lines; '#' starts a comment, blanks ignored."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = stripped.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def build_config(file_values=None, overrides=None):
    """Merge config file values and flag overrides over the defaults."""
    merged = dict(file_values or {})
    merged.update(overrides or {})
    by_name = {f.name: f for f in fields(RunConfig)}
    kwargs = {}
    for key, raw in merged.items():
        fld = by_name.get(key)
        if fld is None:
            raise ConfigError(f"unknown config key: {key!r}")
        kind = {int: int, float: float, str: str, bool: bool,
                tuple: tuple}[fld.type if isinstance(fld.type, type)
                              else type(fld.default)]
        kwargs[key] = _coerce(key, kind, raw) if isinstance(raw, str) else raw
    return RunConfig(**kwargs)
