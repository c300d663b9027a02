"""Command-line entry points: index building, serving, evaluation, synthesis."""
from __future__ import annotations

import functools
from pathlib import Path

import click

from .errors import RapidError


def _forward_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RapidError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
def main():
    """Text-based video event retrieval engine."""


@main.group()
def index():
    """Build the keyframe manifest and the embedding store."""


@index.command("build-manifest")
@click.option("--scenes", "scenes_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--image-root", default="", help="Prefix joined onto every image path.")
@click.option(
    "--image-pattern",
    default="{video_id}/{frame_index}.jpg",
    show_default=True,
    help="Per-keyframe image path template.",
)
@click.option("--ocr", "ocr_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Optional OCR sidecar JSONL {video_id, frame_index, text}.")
@_forward_errors
def build_manifest_cmd(scenes_path, out_path, image_root, image_pattern, ocr_path):
    """Select keyframes from a scenes JSONL file and write the manifest."""
    from .keyframes import build_manifest, read_ocr_sidecar, read_scenes, write_manifest

    scenes = read_scenes(scenes_path)
    ocr = read_ocr_sidecar(ocr_path) if ocr_path else None
    records, summary = build_manifest(scenes, image_root, image_pattern, ocr)
    write_manifest(records, out_path)
    click.echo(
        f"{summary.video_count} videos, {summary.scene_count} scenes -> "
        f"{summary.keyframe_count} keyframes written to {out_path}"
    )


@index.command("embed")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--backend", type=click.Choice(["mock", "http"]), default="mock", show_default=True)
@click.option("--dim", default=512, show_default=True, help="Embedding dimension.")
@click.option("--captions", "captions_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Caption sidecar JSONL for the mock backend.")
@click.option("--url", default=None, help="Embedding service URL for the http backend.")
@_forward_errors
def embed_cmd(manifest_path, out_path, backend, dim, captions_path, url):
    """Embed every manifest keyframe into the binary store."""
    from .embedding import CaptionSidecar, HttpEmbeddingBackend, MockEmbeddingBackend, embed_keyframes
    from .errors import ConfigurationError
    from .keyframes import Manifest

    manifest = Manifest.load(manifest_path)
    if backend == "mock":
        if captions_path is None:
            raise ConfigurationError("--captions is required with the mock backend")
        be = MockEmbeddingBackend(dim)
        captions = CaptionSidecar.load(captions_path)
    else:
        if url is None:
            raise ConfigurationError("--url is required with the http backend")
        be = HttpEmbeddingBackend(url, dim)
        captions = None
    store = embed_keyframes(manifest.records, be, captions)
    store.save(out_path)
    click.echo(f"embedded {store.count} keyframes (d={store.dimension}) -> {out_path}")


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None, help="Override serve.host.")
@click.option("--port", default=None, type=int, help="Override serve.port.")
@click.option("--ui", "ui_path", default=None, type=click.Path(exists=True, file_okay=False),
              help="Override ui.dist_path (directory of built frontend assets).")
@_forward_errors
def serve_cmd(config_path, host, port, ui_path):
    """Run the retrieval service."""
    import uvicorn

    from .config import load_config
    from .service import create_app

    config = load_config(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    if ui_path:
        config.ui_dist_path = Path(ui_path)
    app = create_app(config)
    click.echo(f"serving on http://{config.host}:{config.port}", err=True)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.group(name="eval")
def eval_group():
    """Run and compare retrieval evaluations."""


@eval_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["naive", "augmented"]), required=True)
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--k-per-draft", "k_per_draft", default=None, type=int,
              help="Candidates per draft; defaults to the config value.")
@click.option("--final-k", "final_k", default=None, type=int,
              help="Final result size; defaults to the config value.")
@click.option("--n-drafts", default=None, type=int, help="Drafts per query in augmented mode.")
@_forward_errors
def eval_run_cmd(config_path, dataset_path, mode, report_path, k_per_draft, final_k, n_drafts):
    """Evaluate naive or augmented retrieval on a ground-truth dataset."""
    from .config import load_config
    from .evaluation import load_dataset, run_eval
    from .service import build_backend, build_drafter
    from .embedding import EmbeddingStore
    from .index import EmbeddingIndex
    from .keyframes import Manifest
    from .pipeline import SearchEngine

    config = load_config(config_path)
    manifest = Manifest.load(config.manifest_path)
    store = EmbeddingStore.load(config.store_path)
    engine = SearchEngine(EmbeddingIndex.from_store(store), manifest, build_backend(config))
    records = load_dataset(dataset_path, manifest)
    drafter = build_drafter(config) if mode == "augmented" else None
    report = run_eval(
        records,
        engine,
        mode,
        drafter=drafter,
        n_drafts=n_drafts if n_drafts is not None else config.n_drafts_default,
        k_per_draft=k_per_draft if k_per_draft is not None else config.k_per_draft_default,
        final_k=final_k if final_k is not None else config.final_k_default,
    )
    report.save(report_path)
    click.echo(f"{mode}: {report.query_count} queries  MRR {report.mrr:.4f}")
    for k, v in sorted(report.p_at.items()):
        click.echo(f"  P@{k}: {v:.4f}")
    for k, v in sorted(report.r_at.items()):
        click.echo(f"  R@{k}: {v:.4f}")
    click.echo(f"report written to {report_path}")


@eval_group.command("compare")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_forward_errors
def eval_compare_cmd(a_path, b_path):
    """Print metric deltas between two evaluation reports."""
    from .evaluation import MetricReport, compare_reports

    for line in compare_reports(MetricReport.load(a_path), MetricReport.load(b_path)):
        click.echo(line)


@main.command("synth")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--subjects", default=25, show_default=True)
@click.option("--locations", default=5, show_default=True)
@click.option("--frames-per-scene", default=9, show_default=True)
@click.option("--dim", default=128, show_default=True)
@click.option("--images/--no-images", default=False, show_default=True,
              help="Also render placeholder thumbnails.")
@_forward_errors
def synth_cmd(out_dir, subjects, locations, frames_per_scene, dim, images):
    """Generate a synthetic corpus (scenes, manifest, store, dataset, config)."""
    from .synthetic import generate_corpus

    corpus = generate_corpus(
        out_dir,
        subjects=subjects,
        locations=locations,
        frames_per_scene=frames_per_scene,
        dim=dim,
        images=images,
    )
    click.echo(
        f"synthetic corpus: {corpus.event_count} events, {corpus.keyframe_count} keyframes "
        f"under {corpus.root}"
    )
    click.echo(f"serve it with: rapid serve --config {corpus.config_path}")


if __name__ == "__main__":
    main(prog_name="rapid")
