"""Command-line orchestration: split, train, evaluate, cv, augment, serve.

Options resolve as flag > config file > default; the serve command also
honors MEMETRIAGE_* environment variables (flags win). Exit codes: 0
success, 1 usage, 2 data validation, 3 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .augment import augment_meme, export_augmented
from .corpus import assign_splits, load_corpus, make_folds, save_annotations, save_memes
from .errors import DataValidationError, MemetriageError
from .gbdt import GbdtParams, load_gbdt, save_gbdt
from .gbdt import MODEL_FORMAT as GBDT_FORMAT
from .lexicons import bundled_lexicons, load_lexicons
from .lstm import LstmParams, load_lstm, save_lstm
from .lstm import MODEL_FORMAT as LSTM_FORMAT
from .metrics import cross_validate
from .pipeline import (
    evaluate_gbdt,
    evaluate_lstm,
    fit_corpus_vocabulary,
    gbdt_scores,
    lstm_scores,
    sequences_for,
    train_gbdt_on_corpus,
    train_lstm_on_corpus,
    usable_records,
)
from .synthetic import generate_corpus
from .vectorizer import feature_names, load_vocabulary, save_vocabulary
from .errors import ParseError


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise DataValidationError(f"{path}: config must be a JSON object")
    return obj


def _pick(flag, config: dict, key: str, default):
    """Option precedence: explicit flag, then config file, then default."""
    if flag is not None:
        return flag
    if key in config and config[key] is not None:
        return config[key]
    return default


def _lexicons_from(path: str | None):
    return bundled_lexicons() if path is None else load_lexicons(path)


def _prepared_corpus(memes: str, annotations: str, seed: int):
    corpus = load_corpus(memes, annotations)
    if any(r.split == "unassigned" for r in corpus.labeled_records()):
        corpus = assign_splits(corpus, seed)
    else:
        corpus.split_seed = seed
    return corpus


def _gbdt_params(config: dict, **flags) -> GbdtParams:
    section = config.get("gbdt", {})
    defaults = GbdtParams()
    return GbdtParams(
        **{
            key: _pick(flags.get(key), section, key, getattr(defaults, key))
            for key in (
                "n_estimators",
                "learning_rate",
                "max_depth",
                "scale_pos_weight",
                "min_gain_prune",
                "min_samples_leaf",
            )
        }
    )


def _lstm_params(config: dict, **flags) -> LstmParams:
    section = config.get("lstm", {})
    defaults = LstmParams()
    return LstmParams(
        **{
            key: _pick(flags.get(key), section, key, getattr(defaults, key))
            for key in (
                "input_dim",
                "hidden_units",
                "dense1_units",
                "dense2_units",
                "epochs",
                "learning_rate",
                "adam_beta1",
                "adam_beta2",
                "adam_eps",
                "seed",
                "batch_size",
                "max_seq_len",
            )
        }
    )


def _sniff_model(path: str):
    """Load a model file of either kind; returns (kind, model, split_seed)."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a valid model file: {exc.msg}") from exc
    fmt = payload.get("format") if isinstance(payload, dict) else None
    if fmt == GBDT_FORMAT:
        model, seed = load_gbdt(path)
        return "gbdt", model, seed
    if fmt == LSTM_FORMAT:
        model, seed = load_lstm(path)
        return "lstm", model, seed
    raise ParseError(f"{path}: unrecognized model format {fmt!r}")


def _default_vocab_path(model_file: str) -> str:
    return model_file + ".vocab"


@click.group()
def cli():
    """Interpretable meme triage pipeline."""


@cli.command("gen-synthetic")
@click.option("--out", required=True, type=click.Path(), help="Output dataset directory.")
@click.option("--n", default=400, show_default=True, help="Number of memes.")
@click.option("--seed", default=0, show_default=True)
@click.option("--hateful-frac", default=0.37, show_default=True)
def cmd_gen_synthetic(out, n, seed, hateful_frac):
    """Generate a synthetic corpus with planted, recoverable signals."""
    summary = generate_corpus(out, n=n, seed=seed, hateful_fraction=hateful_frac)
    click.echo(f"wrote {summary['n']} memes ({summary['n_hateful']} hateful) to {out}")


@cli.command("split")
@click.option("--memes", required=True, type=click.Path())
@click.option("--annotations", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--out-memes", required=True, type=click.Path())
@click.option("--out-annotations", default=None, type=click.Path())
def cmd_split(memes, annotations, seed, out_memes, out_annotations):
    """Assign stratified train/validation/test splits and write them back."""
    corpus = assign_splits(load_corpus(memes, annotations), seed)
    save_memes(corpus, out_memes)
    if out_annotations is not None:
        save_annotations(corpus, out_annotations)
    counts = {s: len(corpus.records_in_split(s)) for s in ("train", "validation", "test")}
    click.echo(
        f"split seed {seed}: train {counts['train']} validation {counts['validation']} "
        f"test {counts['test']}"
    )


@cli.command("train")
@click.option("--model", "model_kind", type=click.Choice(["gbdt", "lstm"]), required=True)
@click.option("--memes", default=None, type=click.Path())
@click.option("--annotations", default=None, type=click.Path())
@click.option("--lexicons", "lexicons_path", default=None, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Model file to write.")
@click.option("--vocab-out", default=None, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--seed", default=None, type=int, help="Split seed.")
@click.option("--threshold", default=None, type=float)
@click.option("--min-df", default=None, type=int)
@click.option("--max-features", default=None, type=int)
@click.option("--report-out", default=None, type=click.Path())
@click.option("--n-estimators", default=None, type=int)
@click.option("--learning-rate", default=None, type=float)
@click.option("--max-depth", default=None, type=int)
@click.option("--scale-pos-weight", default=None, type=float)
@click.option("--min-gain-prune", default=None, type=float)
@click.option("--min-samples-leaf", default=None, type=int)
@click.option("--hidden-units", default=None, type=int)
@click.option("--dense1-units", default=None, type=int)
@click.option("--dense2-units", default=None, type=int)
@click.option("--epochs", default=None, type=int)
@click.option("--batch-size", default=None, type=int)
@click.option("--max-seq-len", default=None, type=int)
@click.option("--lstm-seed", default=None, type=int)
def cmd_train(
    model_kind,
    memes,
    annotations,
    lexicons_path,
    out,
    vocab_out,
    config_path,
    seed,
    threshold,
    min_df,
    max_features,
    report_out,
    **model_flags,
):
    """Fit on the train split and report validation metrics."""
    config = _load_config(config_path)
    memes = _pick(memes, config, "memes", None)
    annotations = _pick(annotations, config, "annotations", None)
    if memes is None or annotations is None:
        raise click.UsageError("--memes and --annotations are required (flag or config)")
    lexicons = _lexicons_from(_pick(lexicons_path, config, "lexicons", None))
    seed = _pick(seed, config, "seed", 0)
    threshold = _pick(threshold, config, "threshold", 0.5)
    corpus = _prepared_corpus(memes, annotations, seed)

    if model_kind == "gbdt":
        params = _gbdt_params(config, **model_flags)
        model, vocab = train_gbdt_on_corpus(
            corpus,
            lexicons,
            params,
            min_df=_pick(min_df, config, "min_df", 2),
            max_features=_pick(max_features, config, "max_features", None),
        )
        report = evaluate_gbdt(corpus, lexicons, model, vocab, "validation", threshold)
        save_gbdt(model, out, split_seed=corpus.split_seed)
        save_vocabulary(vocab, vocab_out or _default_vocab_path(out))
    else:
        lstm_flags = {
            "hidden_units": model_flags.get("hidden_units"),
            "dense1_units": model_flags.get("dense1_units"),
            "dense2_units": model_flags.get("dense2_units"),
            "epochs": model_flags.get("epochs"),
            "learning_rate": model_flags.get("learning_rate"),
            "batch_size": model_flags.get("batch_size"),
            "max_seq_len": model_flags.get("max_seq_len"),
            "seed": model_flags.get("lstm_seed"),
        }
        params = _lstm_params(config, **lstm_flags)
        model = train_lstm_on_corpus(corpus, params)
        report = evaluate_lstm(corpus, model, "validation", threshold)
        save_lstm(model, out, split_seed=corpus.split_seed)
        click.echo(f"epochs {len(model.history)} final_loss {model.history[-1]:.6f}")

    for line in report.lines():
        click.echo(line)
    if report_out:
        Path(report_out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    click.echo(f"model written to {out}")


@cli.command("evaluate")
@click.option("--model-file", required=True, type=click.Path())
@click.option("--memes", default=None, type=click.Path())
@click.option("--annotations", default=None, type=click.Path())
@click.option("--lexicons", "lexicons_path", default=None, type=click.Path())
@click.option("--vocab-file", default=None, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--split", type=click.Choice(["validation", "test"]), default="validation", show_default=True)
@click.option("--seed", default=None, type=int, help="Split seed (defaults to the model's).")
@click.option("--threshold", default=None, type=float)
@click.option("--report-out", default=None, type=click.Path())
def cmd_evaluate(
    model_file, memes, annotations, lexicons_path, vocab_file, config_path, split, seed, threshold, report_out
):
    """Report auROC/accuracy/precision/recall for a stored model on one split."""
    config = _load_config(config_path)
    memes = _pick(memes, config, "memes", None)
    annotations = _pick(annotations, config, "annotations", None)
    if memes is None or annotations is None:
        raise click.UsageError("--memes and --annotations are required (flag or config)")
    threshold = _pick(threshold, config, "threshold", 0.5)
    kind, model, stored_seed = _sniff_model(model_file)
    seed = _pick(seed, config, "seed", stored_seed if stored_seed is not None else 0)
    corpus = _prepared_corpus(memes, annotations, seed)
    if kind == "gbdt":
        lexicons = _lexicons_from(_pick(lexicons_path, config, "lexicons", None))
        vocab = load_vocabulary(vocab_file or _default_vocab_path(model_file))
        report = evaluate_gbdt(corpus, lexicons, model, vocab, split, threshold)
    else:
        report = evaluate_lstm(corpus, model, split, threshold)
    for line in report.lines():
        click.echo(line)
    if report_out:
        Path(report_out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


@cli.command("cv")
@click.option("--model", "model_kind", type=click.Choice(["gbdt", "lstm"]), required=True)
@click.option("--memes", default=None, type=click.Path())
@click.option("--annotations", default=None, type=click.Path())
@click.option("--lexicons", "lexicons_path", default=None, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--k", default=5, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--threshold", default=None, type=float)
@click.option("--min-df", default=None, type=int)
@click.option("--max-features", default=None, type=int)
def cmd_cv(model_kind, memes, annotations, lexicons_path, config_path, k, seed, threshold, min_df, max_features):
    """K-fold cross-validation over the non-test labeled pool."""
    config = _load_config(config_path)
    memes = _pick(memes, config, "memes", None)
    annotations = _pick(annotations, config, "annotations", None)
    if memes is None or annotations is None:
        raise click.UsageError("--memes and --annotations are required (flag or config)")
    seed = _pick(seed, config, "seed", 0)
    threshold = _pick(threshold, config, "threshold", 0.5)
    min_df = _pick(min_df, config, "min_df", 2)
    max_features = _pick(max_features, config, "max_features", None)
    corpus = _prepared_corpus(memes, annotations, seed)
    usable_ids = {r.id for r in usable_records(corpus)}
    folds = make_folds(corpus, k, seed)
    folds = [
        ([i for i in train if i in usable_ids], [i for i in hold if i in usable_ids])
        for train, hold in folds
    ]
    labels_by_id = {r.id: r.label for r in corpus.labeled_records()}
    lexicons = _lexicons_from(_pick(lexicons_path, config, "lexicons", None))

    if model_kind == "gbdt":
        params = _gbdt_params(config)

        def trainer(train_ids, holdout_ids):
            model, vocab = train_gbdt_on_corpus(
                corpus, lexicons, params, min_df=min_df, max_features=max_features, train_ids=train_ids
            )
            records = [corpus.record_by_id(mid) for mid in holdout_ids]
            return gbdt_scores(records, corpus, lexicons, model, vocab)

    else:
        params = _lstm_params(config)

        def trainer(train_ids, holdout_ids):
            model = train_lstm_on_corpus(corpus, params, train_ids=train_ids)
            records = [corpus.record_by_id(mid) for mid in holdout_ids]
            return lstm_scores(records, corpus, model)

    report = cross_validate(trainer, folds, labels_by_id, threshold)
    for line in report.lines():
        click.echo(line)


@cli.command("augment")
@click.option("--model-file", required=True, type=click.Path())
@click.option("--vocab-file", default=None, type=click.Path())
@click.option("--memes", default=None, type=click.Path())
@click.option("--annotations", default=None, type=click.Path())
@click.option("--lexicons", "lexicons_path", default=None, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--threshold", default=None, type=float)
@click.option("--top-k", default=None, type=int)
def cmd_augment(model_file, vocab_file, memes, annotations, lexicons_path, config_path, out, threshold, top_k):
    """Write augmentation records for every flagged annotated meme."""
    config = _load_config(config_path)
    memes = _pick(memes, config, "memes", None)
    annotations = _pick(annotations, config, "annotations", None)
    if memes is None or annotations is None:
        raise click.UsageError("--memes and --annotations are required (flag or config)")
    threshold = _pick(threshold, config, "threshold", 0.5)
    top_k = _pick(top_k, config, "top_k", 8)
    kind, model, _ = _sniff_model(model_file)
    if kind != "gbdt":
        raise DataValidationError(
            "augmentation requires the boosted-tree model: per-prediction attribution "
            "is not available for the LSTM"
        )
    lexicons = _lexicons_from(_pick(lexicons_path, config, "lexicons", None))
    vocab = load_vocabulary(vocab_file or _default_vocab_path(model_file))
    corpus = load_corpus(memes, annotations)
    augmented = []
    for record in corpus.annotated_records():
        item = augment_meme(
            record, corpus.bundle_for(record.id), model, vocab, lexicons, top_k=top_k, threshold=threshold
        )
        if item.score >= threshold:
            augmented.append(item)
    count = export_augmented(augmented, out)
    click.echo(f"wrote {count} augmented memes to {out}")


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--memes", default=None, type=click.Path())
@click.option("--annotations", default=None, type=click.Path())
@click.option("--lexicons", "lexicons_path", default=None, type=click.Path())
@click.option("--model-file", required=True, type=click.Path())
@click.option("--vocab-file", default=None, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--threshold", default=None, type=float)
@click.option("--top-k", default=None, type=int)
@click.option("--label-log", default=None, type=click.Path())
def cmd_serve(
    host, port, memes, annotations, lexicons_path, model_file, vocab_file, config_path, threshold, top_k, label_log
):
    """Serve the review queue over HTTP."""
    import uvicorn

    from .service import ReviewState, create_app

    config = _load_config(config_path)
    memes = _pick(memes, config, "memes", None)
    annotations = _pick(annotations, config, "annotations", None)
    if memes is None or annotations is None:
        raise click.UsageError("--memes and --annotations are required (flag or config)")
    threshold = _pick(threshold, config, "threshold", 0.5)
    top_k = _pick(top_k, config, "top_k", 8)
    label_log = _pick(label_log, config, "label_log", None)
    kind, model, _ = _sniff_model(model_file)
    if kind != "gbdt":
        raise DataValidationError("the review service requires a boosted-tree model")
    lexicons = _lexicons_from(_pick(lexicons_path, config, "lexicons", None))
    vocab = load_vocabulary(vocab_file or _default_vocab_path(model_file))
    corpus = load_corpus(memes, annotations)
    state = ReviewState(
        corpus, model, vocab, lexicons, threshold=threshold, top_k=top_k, label_log=label_log
    )
    app = create_app(state, image_root=Path(memes).parent)
    click.echo(f"serving {len(state.items)} memes on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None):
    click.UsageError.exit_code = 1
    try:
        cli.main(args=argv, standalone_mode=False, auto_envvar_prefix="MEMETRIAGE")
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (DataValidationError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except MemetriageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        click.echo(f"unexpected error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
