"""Operator command line: ingest frame directories, manage accounts, create
assignments, run consensus, export labels and emit efficiency reports.

Exit codes: 0 success, 2 validation error, 3 missing prerequisite.
"""

from __future__ import annotations

import datetime as dt
import functools
import json
import re
import sys
from pathlib import Path

import click
from PIL import Image

from . import ops
from .consensus import ConsensusConfig
from .errors import (
    ConfigurationError,
    DomainError,
    IngestionError,
    LabelingError,
    StateError,
)
from .store import FRAME_NAME_RE, AccountRole, DataStore, VideoMeta
from .workflow import (
    assignments_to_csv,
    create_assignments,
    split_video,
)

EXIT_VALIDATION = 2
EXIT_MISSING_PREREQUISITE = 3


def ingest_frames(
    store: DataStore,
    src_dir: str | Path,
    video_id: str,
    fps: float = 1.0,
    polarity_inverted: bool = False,
) -> VideoMeta:
    """Validate a frame directory and copy it into the data root.

    Frames must be named frame_000000.png onward with no gaps and share one
    size; images are normalized to 8-bit grayscale PNG on the way in.
    """
    src = Path(src_dir)
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", video_id):
        raise IngestionError(f"invalid video id {video_id!r}")
    names = sorted(p.name for p in src.glob("frame_*.png"))
    if not names:
        raise IngestionError(f"no frame_*.png files in {src}")
    indices = []
    for name in names:
        m = FRAME_NAME_RE.fullmatch(name)
        if not m:
            raise IngestionError(f"bad frame filename {name!r}")
        indices.append(int(m.group(1)))
    expected = list(range(len(indices)))
    if indices != expected:
        gaps = sorted(set(expected) - set(indices))
        raise IngestionError(
            "frame numbering has gaps; missing "
            + ", ".join(f"frame_{g:06d}.png" for g in gaps)
        )

    sizes = {}
    for name in names:
        with Image.open(src / name) as im:
            sizes.setdefault(im.size, []).append(name)
    if len(sizes) > 1:
        detail = "; ".join(
            f"{w}x{h}: {files[0]}" for (w, h), files in sorted(sizes.items())
        )
        raise IngestionError(f"mixed frame dimensions ({detail})")
    (width, height), _ = sizes.popitem()

    meta = VideoMeta(
        video_id=video_id,
        frame_count=len(names),
        width=width,
        height=height,
        fps=fps,
        polarity_inverted=polarity_inverted,
    )
    store.register_video(meta)
    frames_dir = store.video_dir(video_id) / "frames"
    for name in names:
        with Image.open(src / name) as im:
            im.convert("L").save(frames_dir / name, format="PNG")
    return meta


def _current_week() -> str:
    iso = dt.date.today().isocalendar()
    return f"{iso.year}-W{iso.week:02d}"


def cli_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except StateError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_MISSING_PREREQUISITE)
        except LabelingError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)

    return wrapper


@click.group()
@click.option(
    "--data-root",
    envvar="THERMOLABEL_DATA_ROOT",
    default="./data",
    show_default=True,
    help="Data root shared with the service (env THERMOLABEL_DATA_ROOT).",
)
@click.pass_context
def main(ctx, data_root):
    """Administer a thermolabel data root."""
    ctx.obj = DataStore(data_root)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--video-id", required=True)
@click.option("--fps", type=float, default=1.0, show_default=True)
@click.option("--polarity-inverted", is_flag=True, default=False)
@click.pass_obj
@cli_errors
def ingest(store, directory, video_id, fps, polarity_inverted):
    """Validate and import a directory of frame PNGs."""
    meta = ingest_frames(store, directory, video_id, fps, polarity_inverted)
    click.echo(
        f"ingested {meta.video_id}: {meta.frame_count} frames "
        f"({meta.width}x{meta.height})"
    )


@main.group()
def user():
    """Manage accounts."""


@user.command("add")
@click.argument("username")
@click.option("--password", prompt=True, hide_input=True)
@click.option("--admin", is_flag=True, default=False)
@click.pass_obj
@cli_errors
def user_add(store, username, password, admin):
    role = AccountRole.ADMIN if admin else AccountRole.LABELER
    account = store.add_account(username, password, role)
    click.echo(f"added {account.username} ({account.role.value})")


@user.command("rm")
@click.argument("username")
@click.pass_obj
@cli_errors
def user_rm(store, username):
    store.remove_account(username)
    click.echo(f"removed {username}")


@main.command()
@click.option(
    "--framework",
    type=click.Choice(["majvote", "labelreview"]),
    required=True,
)
@click.option("--max-frames", type=int, required=True)
@click.option("--week", default=None, help="ISO week, defaults to the current one.")
@click.option("--panel-size", type=int, default=5, show_default=True)
@click.pass_obj
@cli_errors
def assign(store, framework, max_frames, week, panel_size):
    """Split every video into segments and distribute assignments."""
    videos = store.list_videos()
    if not videos:
        raise DomainError("no videos ingested")
    labelers = [
        a.account_id for a in store.list_accounts() if a.role is AccountRole.LABELER
    ]
    if not labelers:
        raise ConfigurationError("no labeler accounts")

    segments = []
    for meta in videos:
        segments.extend(split_video(meta.video_id, meta.frame_count, max_frames))
    fw = "MajVote" if framework == "majvote" else "LabelReview"
    assignments = create_assignments(
        segments,
        labelers,
        fw,
        week or _current_week(),
        panel_size=panel_size,
        existing=store.list_assignments(),
    )
    store.save_segments(segments)
    store.save_assignments(store.list_assignments() + assignments)

    csv_path = store.root / "assignments.csv"
    csv_path.write_text(assignments_to_csv(store.list_assignments()))
    click.echo(
        f"created {len(assignments)} assignments over {len(segments)} segments; "
        f"spreadsheet at {csv_path}"
    )


@main.command()
@click.argument("segment_id")
@click.option(
    "--framework",
    type=click.Choice(["majvote", "labelreview"]),
    required=True,
)
@click.pass_obj
@cli_errors
def consensus(store, segment_id, framework):
    """Compute and persist final labels for a segment."""
    fw = "MajVote" if framework == "majvote" else "LabelReview"
    finals = ops.run_consensus(store, segment_id, fw, ConsensusConfig())
    click.echo(f"{segment_id}: {len(finals)} final labels ({fw})")


@main.command()
@click.argument("videos", nargs=-1)
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
@cli_errors
def export(store, videos, fmt, out):
    """Write final labels as CSV or JSONL."""
    records = ops.export_records(store, list(videos) or None)
    if fmt == "csv":
        text = ops.records_to_csv(records)
    else:
        text = ops.records_to_jsonl(records)
    Path(out).write_text(text)
    if not records:
        click.echo("warning: no final labels to export", err=True)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command()
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--no-trim", is_flag=True, default=False)
@click.option("--global-trim", is_flag=True, default=False)
@click.pass_obj
@cli_errors
def report(store, out, no_trim, global_trim):
    """Emit the efficiency report (JSON, CSV tables, histogram tables)."""
    from .analytics import histogram_csv

    rep = ops.efficiency_report(
        store, trim=not no_trim, per_group_trim=not global_trim
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    lines = [
        "video_id,framework,density_group,person_seconds,final_labels,"
        "seconds_per_final_label"
    ]
    for v in rep.videos:
        spl = "" if v.seconds_per_final_label is None else f"{v.seconds_per_final_label:.6g}"
        lines.append(
            f"{v.video_id},{v.framework},{v.group.value},"
            f"{v.total_person_seconds:.6g},{v.final_label_count},{spl}"
        )
    (out_dir / "overall.csv").write_text("\n".join(lines) + "\n")

    lines = ["video_id,account,role,person_seconds,label_count,seconds_per_label"]
    for e in rep.entries:
        spl = e.seconds_per_label()
        lines.append(
            f"{e.video_id},{e.account_id},{e.role.value},"
            f"{e.person_seconds:.6g},{e.label_count},"
            f"{'' if spl is None else f'{spl:.6g}'}"
        )
    (out_dir / "individual.csv").write_text("\n".join(lines) + "\n")

    (out_dir / "hist_labels_per_frame.csv").write_text(
        histogram_csv(rep.per_frame_hist)
    )
    (out_dir / "hist_labels_per_labeled_frame.csv").write_text(
        histogram_csv(rep.per_labeled_frame_hist)
    )
    click.echo(f"report written to {out_dir}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--session-timeout", type=float, default=12 * 3600, show_default=True)
@click.option("--tracker-buffer", type=int, default=10, show_default=True)
@click.option("--tracker-brightness", type=int, default=200, show_default=True)
@click.option("--tracker-size-threshold", type=int, default=2500, show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False, exists=True), default=None)
@click.pass_context
def serve(ctx, host, port, session_timeout, tracker_buffer, tracker_brightness,
          tracker_size_threshold, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    from .tracker import TrackerConfig

    app = create_app(
        ctx.obj.root,
        session_timeout=session_timeout,
        tracker_defaults=TrackerConfig(
            buffer=tracker_buffer,
            brightness_threshold=tracker_brightness,
            size_threshold=tracker_size_threshold,
        ),
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
