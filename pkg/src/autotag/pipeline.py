"""End-to-end command implementations behind the CLI.

Every command takes a :class:`RunConfig`, writes its artifacts under
the run directory and appends them to ``produced_files.txt`` there.
All outputs are reproducible: same config and seed give byte-identical
files.
"""

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import synth
from .balance import (clamped_weights, init_balanced_net, logentropy_weights,
                      train_balanced)
from .bundle import make_bundle
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .dataset import (Vocabulary, load_manifest, load_manifest_lenient,
                      tag_frequency)
from .decoder import (ModelDims, decode_tags, default_candidate_count,
                      init_model, train_decoder)
from .embeddings import load_vectors, write_uncovered_report
from .errors import ConfigError, DataError
from .evaluate import evaluate, format_table, write_report_csv
from .featfile import read_features, write_features
from .highlevel import fallback_descriptor, ingest_features
from .lowlevel import LowLevelConfig, extract_lowlevel

PRODUCED_MANIFEST = "produced_files.txt"


def _record_outputs(cfg, command, paths):
    cfg.require_out_dir()
    note = os.path.join(cfg.out_dir, PRODUCED_MANIFEST)
    with open(note, "a", encoding="utf-8") as fh:
        for p in paths:
            fh.write(f"{command}\t{os.path.relpath(p, cfg.out_dir)}\n")


def run_synth(cfg: RunConfig):
    cfg.require_seed()
    cfg.require_out_dir()
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = synth.generate(
        cfg.out_dir, seed=cfg.seed, n_images=cfg.synth_images,
        n_keywords=cfg.synth_keywords, skew=cfg.synth_skew,
        image_size=cfg.synth_size, embed_dim=cfg.synth_embed_dim)
    produced = [manifest, os.path.join(cfg.out_dir, "embeddings.txt"),
                os.path.join(cfg.out_dir, "images")]
    _record_outputs(cfg, "synth", produced)
    print(f"synth: wrote {cfg.synth_images} images, "
          f"{cfg.synth_keywords} keywords under {cfg.out_dir}")
    return manifest


def _lowlevel_config(cfg):
    return LowLevelConfig(resize=cfg.resize, wavelet_levels=cfg.wavelet_levels,
                          glcm_levels=cfg.q_levels,
                          color_tolerance=cfg.color_tolerance)


def _extract_one(args):
    record, ll_cfg, want_fallback = args
    ll = extract_lowlevel(record, ll_cfg).fused
    hl = fallback_descriptor(record).vector if want_fallback else None
    return record.id, ll, hl


def run_extract(cfg: RunConfig):
    cfg.require_seed()
    cfg.require_out_dir()
    if not cfg.manifest:
        raise ConfigError("extract needs manifest=<path>")
    os.makedirs(cfg.out_dir, exist_ok=True)

    dataset, load_errors = load_manifest_lenient(cfg.manifest)
    ll_cfg = _lowlevel_config(cfg)
    want_fallback = cfg.hl_source == "fallback"

    jobs = []
    errors = list(load_errors)
    for rec in dataset.records:
        if rec.pixels is None and not rec.id.startswith("@"):
            continue  # load failure already recorded
        if rec.pixels is None:
            continue  # declared feature-only
        jobs.append((rec, ll_cfg, want_fallback))

    results = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [(job[0].id, pool.submit(_extract_one, job))
                       for job in jobs]
            for rec_id, future in futures:  # manifest order, deterministic
                try:
                    outcome = future.result()
                except DataError as exc:
                    errors.append((rec_id, str(exc)))
                    continue
                print(f"extracted {outcome[0]}")
                results.append(outcome)
    else:
        for job in jobs:
            start = time.perf_counter()
            try:
                outcome = _extract_one(job)
            except DataError as exc:
                errors.append((job[0].id, str(exc)))
                continue
            ms = (time.perf_counter() - start) * 1e3
            print(f"extracted {outcome[0]} in {ms:.1f} ms")
            results.append(outcome)

    if not results:
        raise DataError("no image could be extracted")

    produced = []
    low_path = cfg.path(cfg.features_low, "lowlevel.feat")
    write_features(low_path, {rid: ll for rid, ll, _ in results}, "lowlevel")
    produced.append(low_path)
    if want_fallback:
        high_path = cfg.path(cfg.features_high, "highlevel.feat")
        write_features(high_path, {rid: hl for rid, _, hl in results},
                       "fallback")
        produced.append(high_path)

    if errors:
        err_path = os.path.join(cfg.out_dir, "extract_errors.txt")
        with open(err_path, "w", encoding="utf-8") as fh:
            for rid, msg in errors:
                fh.write(f"{rid}\t{msg}\n")
        produced.append(err_path)
        print(f"extract: {len(errors)} image(s) failed, see {err_path}")

    _record_outputs(cfg, "extract", produced)
    print(f"extract: {len(results)} descriptors -> {low_path}")
    return low_path


def run_weights(cfg: RunConfig):
    cfg.require_seed()
    cfg.require_out_dir()
    if not cfg.manifest:
        raise ConfigError("weights needs manifest=<path>")
    os.makedirs(cfg.out_dir, exist_ok=True)

    dataset = load_manifest(cfg.manifest)
    w = logentropy_weights(dataset.annotation_matrix)

    out_path = os.path.join(cfg.out_dir, "weights.csv")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "keyword", "weight"])
        for i, rec in enumerate(dataset.records):
            for j in sorted(rec.tag_indices):
                writer.writerow([rec.id, dataset.vocabulary.word(j),
                                 f"{w[i, j]:.4f}"])
    _record_outputs(cfg, "weights", [out_path])
    print(f"weights: equilibrium matrix for {len(dataset)} images -> {out_path}")
    return out_path


def _load_features(cfg, dataset):
    """Low- and high-level vectors for every record, from feature files."""
    low_path = cfg.path(cfg.features_low, "lowlevel.feat")
    source, _, low = read_features(low_path)
    if source != "lowlevel":
        raise DataError(f"{low_path}: expected lowlevel features, got {source!r}")

    high_path = cfg.path(cfg.features_high, "highlevel.feat")
    high_map = ingest_features(high_path)
    if cfg.hl_source != "fallback":
        srcs = {d.source for d in high_map.values()}
        if srcs != {cfg.hl_source}:
            raise DataError(
                f"{high_path}: source {srcs} does not match hl_source="
                f"{cfg.hl_source}")

    missing = [rec.id for rec in dataset.records
               if rec.id not in low or rec.id not in high_map]
    if missing:
        raise DataError(f"features missing for: {', '.join(missing[:5])}"
                        + ("..." if len(missing) > 5 else ""))
    return low, {rid: d.vector for rid, d in high_map.items()}


def _bundles(cfg, dataset, low, high):
    return {rec.id: make_bundle(low[rec.id], high[rec.id], cfg.item_count)
            for rec in dataset.records}


def run_train(cfg: RunConfig):
    cfg.require_seed()
    cfg.require_out_dir()
    if not cfg.manifest:
        raise ConfigError("train needs manifest=<path>")
    if not cfg.embeddings:
        raise ConfigError("train needs embeddings=<path>")
    os.makedirs(cfg.out_dir, exist_ok=True)

    dataset = load_manifest(cfg.manifest)
    low, high = _load_features(cfg, dataset)
    store = load_vectors(cfg.embeddings, dataset.vocabulary)
    if store.uncovered:
        report = os.path.join(cfg.out_dir, "uncovered_keywords.txt")
        write_uncovered_report(report, store)
        print(f"train: {len(store.uncovered)} keyword(s) lack embeddings, "
              f"see {report}")

    phi = dataset.annotation_matrix
    equilibrium = logentropy_weights(phi)
    if cfg.balanced:
        entry_weights = clamped_weights(phi, equilibrium, cfg.w_min)
    else:
        entry_weights = np.ones_like(equilibrium)

    bundles = _bundles(cfg, dataset, low, high)
    first = dataset.records[0].id
    dims = ModelDims(
        vocab_size=len(dataset.vocabulary),
        ll_item_len=bundles[first].ll_items.shape[1],
        hl_item_len=bundles[first].hl_items.shape[1],
        emb_dim=store.dim, hidden_dim=cfg.hidden_dim,
        context_dim=cfg.context_dim, score_dim=cfg.score_dim,
        emb_proj_dim=cfg.emb_proj_dim, item_count=cfg.item_count,
        balance_hidden=cfg.balance_hidden, ll_dim=len(low[first]))

    rng = np.random.default_rng(cfg.seed)
    model = init_model(rng, dims, tau_mode=cfg.tau_mode)

    # the balanced predictor consumes the same compressed vectors the
    # decoder sees (bundle.ll feeds it at decode time)
    features_matrix = np.stack([bundles[rec.id].ll for rec in dataset.records])
    balance_losses = train_balanced(
        model.balance, features_matrix, phi,
        equilibrium if cfg.balanced else np.ones_like(equilibrium),
        epochs=cfg.balance_epochs, lr=cfg.balance_lr,
        weight_floor=cfg.w_min)

    losses = train_decoder(model, dataset, bundles, entry_weights, store,
                           epochs=cfg.epochs, lr=cfg.lr,
                           tag_count=cfg.tag_count)

    ckpt_path = cfg.path(cfg.checkpoint, "checkpoint.bin")
    config_echo = {
        "vocabulary": list(dataset.vocabulary.keywords),
        "tau_mode": cfg.tau_mode,
        "item_count": cfg.item_count,
        "tag_count": cfg.tag_count,
        "candidate_count": cfg.candidate_count,
        "keyword_weights": [float(v) for v in equilibrium.mean(axis=0)],
        "frequencies": [int(v) for v in tag_frequency(dataset)],
        "hl_source": cfg.hl_source,
        "balanced": cfg.balanced,
    }
    metadata = {"seed": cfg.seed, "epochs": cfg.epochs,
                "final_loss": losses[-1] if losses else None,
                "balance_final_loss": balance_losses[-1] if balance_losses else None}
    save_checkpoint(ckpt_path, model, config_echo, metadata)

    curve_path = os.path.join(cfg.out_dir, "loss_curve.csv")
    with open(curve_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(losses):
            writer.writerow([epoch, f"{loss:.10f}"])
    balance_curve_path = os.path.join(cfg.out_dir, "balance_loss_curve.csv")
    with open(balance_curve_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(balance_losses):
            writer.writerow([epoch, f"{loss:.10f}"])

    _record_outputs(cfg, "train", [ckpt_path, curve_path, balance_curve_path])
    print(f"train: loss {losses[0]:.4f} -> {losses[-1]:.4f} "
          f"over {cfg.epochs} epochs, checkpoint {ckpt_path}")
    return ckpt_path


def run_annotate(cfg: RunConfig):
    cfg.require_seed()
    cfg.require_out_dir()
    if not cfg.manifest:
        raise ConfigError("annotate needs manifest=<path>")
    if not cfg.embeddings:
        raise ConfigError("annotate needs embeddings=<path>")

    dataset = load_manifest(cfg.manifest)
    model, echo, _ = load_checkpoint(cfg.path(cfg.checkpoint, "checkpoint.bin"))
    vocab = Vocabulary(echo["vocabulary"])
    unknown = [kw for kw in dataset.vocabulary.keywords if kw not in vocab]
    if unknown:
        print("annotate: manifest tags outside the training vocabulary: "
              + ", ".join(unknown))
    low, high = _load_features(cfg, dataset)
    store = load_vectors(cfg.embeddings, vocab)
    bundles = _bundles(cfg, dataset, low, high)

    keyword_weights = np.array(echo["keyword_weights"])
    frequencies = np.array(echo["frequencies"])
    cand = echo.get("candidate_count") or default_candidate_count(len(vocab))

    pred_path = cfg.path(cfg.predictions, "predictions.txt")
    with open(pred_path, "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            tags = decode_tags(model, bundles[rec.id], store, vocab,
                               keyword_weights,
                               tag_count=echo.get("tag_count", 5),
                               candidate_count=cand, frequencies=frequencies)
            words = ",".join(vocab.word(j) for j in tags)
            fh.write(f"{rec.id}\t{words}\n")
    _record_outputs(cfg, "annotate", [pred_path])
    print(f"annotate: {len(dataset)} images -> {pred_path}")
    return pred_path


def read_predictions(path, vocab):
    predictions = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                image_id, tag_part = line.split("\t")
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected '<id> <TAB> <tags>'")
            predictions[image_id] = [vocab.index(t)
                                     for t in tag_part.split(",") if t]
    return predictions


def run_eval(cfg: RunConfig):
    cfg.require_seed()
    cfg.require_out_dir()
    if not cfg.manifest:
        raise ConfigError("eval needs manifest=<path>")

    dataset = load_manifest(cfg.manifest)
    predictions = read_predictions(
        cfg.path(cfg.predictions, "predictions.txt"), dataset.vocabulary)
    report = evaluate(predictions, dataset)

    csv_path = os.path.join(cfg.out_dir, "report.csv")
    write_report_csv(report, csv_path)
    table_path = os.path.join(cfg.out_dir, "report.txt")
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(format_table(report) + "\n")

    _record_outputs(cfg, "eval", [csv_path, table_path])
    print(format_table(report))
    return report
