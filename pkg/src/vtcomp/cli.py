"""Command-line surface: simulate, compress, analyze-bias, report.

Exit codes: 0 success, 1 data or I/O failure (unreadable files, format
violations, dump/config mismatch), 2 flag or configuration errors.
Every failure prints one line to stderr prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import product
from pathlib import Path

from .bias import (
    aggregate_heatmap,
    grid_selection_concentration,
    heatmap_csv,
    heatmap_payload,
    mean_report_payload,
    tail_concentration,
)
from .errors import ConfigError, DumpError
from .model import GridShape, Placement, PipelineConfig, derive_accounting
from .pipeline import run_pipeline_parallel, write_sequence
from .provider import SyntheticBiasParams, load_dump, synthesize, write_dump


def parse_shape(text: str) -> GridShape:
    try:
        height, width = text.lower().split("x")
        return GridShape(int(height), int(width))
    except (ValueError, ConfigError) as exc:
        raise argparse.ArgumentTypeError(
            f"expected HxW with positive integers, got {text!r}"
        ) from exc


def parse_pool(text: str) -> GridShape | None:
    if text.lower() == "none":
        return None
    return parse_shape(text)


def _comma_list(parse_item):
    def parse(text: str) -> list:
        return [parse_item(part) for part in text.split(",") if part]

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtcomp",
        description="Attention-guided video token compression engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a deterministic synthetic dump")
    sim.add_argument("--frames-shape", type=parse_shape, default=GridShape(24, 24))
    sim.add_argument("--segment-len", type=int, default=5)
    sim.add_argument("--grid", type=parse_shape, default=GridShape(2, 2))
    sim.add_argument("--embed-dim", type=int, default=8)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--beta", type=float, default=0.0, help="positional bias strength")
    sim.add_argument("--gamma", type=float, default=1.0, help="positional bias sharpness")
    sim.add_argument("-o", "--output", required=True)

    comp = sub.add_parser("compress", help="run the two-stage pipeline on a dump")
    comp.add_argument("input")
    comp.add_argument("--grid", type=parse_shape, default=GridShape(2, 2))
    comp.add_argument("--pool", type=parse_pool, default=None, metavar="HxW|none")
    comp.add_argument(
        "--placement",
        choices=["head", "tail"],
        default=None,
        help="summary position (default: tail when a pool is set)",
    )
    comp.add_argument("--workers", type=int, default=1)
    comp.add_argument("--attn-layer", type=int, default=3)
    comp.add_argument("-o", "--output", required=True)
    comp.add_argument("--stats", default=None, help="stats JSON path (default: OUTPUT.stats.json)")

    bias = sub.add_parser("analyze-bias", help="measure per-frame selection concentration")
    bias.add_argument("inputs", nargs="+")
    pick = bias.add_mutually_exclusive_group()
    pick.add_argument("--k", type=int, default=None, help="tokens to select per segment")
    pick.add_argument(
        "--top-fraction",
        type=float,
        default=None,
        help="fraction of tokens to select per segment (default 0.25)",
    )
    bias.add_argument("--selector", choices=["topk", "gapool"], default="topk")
    bias.add_argument("--grid", type=parse_shape, default=GridShape(2, 2))
    bias.add_argument("--segment", default="all", help="'all' or a segment index")
    bias.add_argument("-o", "--out-prefix", required=True)

    rep = sub.add_parser("report", help="tabulate token accounting over configurations")
    rep.add_argument("--frames-shape", type=parse_shape, default=GridShape(24, 24))
    rep.add_argument(
        "--segment-lens", type=_comma_list(int), default=[5], metavar="F[,F...]"
    )
    rep.add_argument(
        "--grids", type=_comma_list(parse_shape), default=[GridShape(2, 2)], metavar="HxW[,...]"
    )
    rep.add_argument(
        "--pools", type=_comma_list(parse_pool), default=[None], metavar="HxW|none[,...]"
    )
    rep.add_argument("-o", "--output", default=None, help="CSV path (default: stdout)")
    rep.add_argument(
        "--keep-invalid",
        action="store_true",
        help="emit invalid configurations as marked rows instead of failing",
    )
    return parser


def cmd_simulate(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        segment_len=args.segment_len,
        grid=args.grid,
        embed_dim=args.embed_dim,
        frame_shape=args.frames_shape,
    )
    params = SyntheticBiasParams(
        seed=args.seed, bias_strength=args.beta, bias_sharpness=args.gamma
    )
    dump = synthesize(config, params)
    with open(args.output, "wb") as fh:
        write_dump(dump, fh)
    print(
        f"wrote {args.output}: segments={dump.segments} "
        f"segment_len={dump.segment_len} frame={dump.frame_shape} "
        f"embed_dim={dump.embed_dim} tokens={dump.segments * dump.tokens_per_segment}"
    )
    return 0


def _load_dump_file(path: str):
    with open(path, "rb") as fh:
        return load_dump(fh)


def cmd_compress(args: argparse.Namespace) -> int:
    dump = _load_dump_file(args.input)
    if args.placement is not None and args.pool is None:
        raise ConfigError("--placement requires --pool")
    placement = (
        Placement.NONE
        if args.pool is None
        else Placement(args.placement or "tail")
    )
    config = PipelineConfig(
        segment_len=dump.segment_len,
        grid=args.grid,
        embed_dim=dump.embed_dim,
        frame_shape=dump.frame_shape,
        pool=args.pool,
        summary_placement=placement,
        attn_layer=args.attn_layer,
    )
    sequence = run_pipeline_parallel(dump, config, args.workers)
    with open(args.output, "wb") as fh:
        write_sequence(sequence, fh)
    accounting = derive_accounting(config)
    stats = {
        "compressed": accounting.compressed_count,
        "summary": accounting.summary_count,
        "total": accounting.total_count,
        "config": {
            "frame_shape": str(config.frame_shape),
            "segment_len": config.segment_len,
            "segments": config.segments,
            "grid": str(config.grid),
            "pool": str(config.pool) if config.pool else None,
            "placement": config.summary_placement.value,
            "attn_layer": config.attn_layer,
            "embed_dim": config.embed_dim,
        },
    }
    stats_path = args.stats or args.output + ".stats.json"
    Path(stats_path).write_text(json.dumps(stats, indent=2) + "\n")
    print(
        f"wrote {args.output} ({len(sequence)} tokens: "
        f"{sequence.compressed_count} compressed + {sequence.summary_count} summary), "
        f"stats in {stats_path}"
    )
    return 0


def _segment_indices(selector: str, segments: int, path: str) -> range:
    if selector == "all":
        return range(segments)
    try:
        index = int(selector)
    except ValueError:
        raise ConfigError(f"--segment must be 'all' or an integer, got {selector!r}")
    if not 0 <= index < segments:
        raise ConfigError(
            f"segment index {index} out of range for {path} with {segments} segments"
        )
    return range(index, index + 1)


def cmd_analyze_bias(args: argparse.Namespace) -> int:
    dumps = []
    for path in args.inputs:
        try:
            dumps.append((path, _load_dump_file(path)))
        except (DumpError, OSError) as exc:
            raise type(exc)(f"{path}: {exc}") from exc
    shape = dumps[0][1].attention.shape[1:]
    for path, dump in dumps:
        if dump.attention.shape[1:] != shape:
            raise DumpError(
                f"{path}: segment shape {dump.attention.shape[1:]} differs from {shape}"
            )

    tokens = int(shape[0] * shape[1] * shape[2])
    if args.selector == "topk":
        if args.k is not None:
            k = args.k
        else:
            k = round((0.25 if args.top_fraction is None else args.top_fraction) * tokens)
        if not 1 <= k <= tokens:
            raise ConfigError(f"k must be in [1, {tokens}], got {k}")

    reports = []
    for path, dump in dumps:
        for seg in _segment_indices(args.segment, dump.segments, path):
            if args.selector == "topk":
                reports.append(tail_concentration(dump.attention[seg], k))
            else:
                reports.append(grid_selection_concentration(dump.attention[seg], args.grid))
    payload = mean_report_payload(reports)

    heatmap = aggregate_heatmap(
        (dump for _, dump in dumps),
        "all" if args.segment == "all" else int(args.segment),
    )

    prefix = Path(args.out_prefix)
    bias_path = prefix.with_name(prefix.name + ".bias.json")
    csv_path = prefix.with_name(prefix.name + ".heatmap.csv")
    hm_json_path = prefix.with_name(prefix.name + ".heatmap.json")
    bias_path.write_text(json.dumps(payload, indent=2) + "\n")
    csv_path.write_text(heatmap_csv(heatmap))
    hm_json_path.write_text(json.dumps(heatmap_payload(heatmap)) + "\n")
    print(
        f"analyzed {len(dumps)} dump(s), {len(reports)} segment(s): "
        f"last-frame share {payload['shares'][-1]:.4f}; "
        f"wrote {bias_path}, {csv_path}, {hm_json_path}"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    lines = ["segment_len,grid,pool,compressed,summary,total,frames,receptive_field,frame_summary,status"]
    for segment_len, grid, pool in product(args.segment_lens, args.grids, args.pools):
        pool_text = str(pool) if pool else "none"
        try:
            config = PipelineConfig(
                segment_len=segment_len,
                grid=grid,
                embed_dim=1,
                frame_shape=args.frames_shape,
                pool=pool,
                summary_placement=Placement.NONE if pool is None else Placement.TAIL,
            )
        except ConfigError:
            if not args.keep_invalid:
                raise
            lines.append(f"{segment_len},{grid},{pool_text},,,,,,,invalid")
            continue
        acc = derive_accounting(config)
        lines.append(
            f"{segment_len},{grid},{pool_text},{acc.compressed_count},"
            f"{acc.summary_count},{acc.total_count},{acc.total_frames},"
            f"{acc.receptive_field or ''},{acc.frame_summary or ''},ok"
        )
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output} ({len(lines) - 1} rows)")
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "compress": cmd_compress,
    "analyze-bias": cmd_analyze_bias,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except DumpError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
