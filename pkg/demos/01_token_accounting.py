#!/usr/bin/env python3
"""Token accounting across configurations.

The compressed token count depends only on segment length and frame
resolution: the grid shrinks each segment spatially by exactly the
factor the pipeline then expands temporally. The pool kernel trades
summary length against receptive field.
"""

from vtcomp import GridShape, PipelineConfig, Placement, derive_accounting


def show(title, configs):
    print(f"\n{title}")
    print(f"{'config':<28}{'compressed':>11}{'summary':>9}{'frames':>8}{'recept.':>9}{'fr.sum':>8}")
    for label, config in configs:
        acc = derive_accounting(config)
        rf = str(acc.receptive_field or "-")
        fs = str(acc.frame_summary or "-")
        print(
            f"{label:<28}{acc.compressed_count:>11}{acc.summary_count:>9}"
            f"{acc.total_frames:>8}{rf:>9}{fs:>8}"
        )


def cfg(segment_len=5, grid=(2, 2), pool=None):
    return PipelineConfig(
        segment_len=segment_len,
        grid=GridShape(*grid),
        embed_dim=8,
        pool=GridShape(*pool) if pool else None,
        summary_placement=Placement.TAIL if pool else Placement.NONE,
    )


show(
    "Segment length sweep (grid 2x2, 24x24 frames):",
    [(f"segment_len={f}", cfg(segment_len=f)) for f in (3, 4, 5, 6)],
)

show(
    "Grid sweep (segment_len 5): compressed count never moves",
    [(f"grid={h}x{w}", cfg(grid=(h, w))) for h, w in ((1, 2), (2, 2), (2, 3), (2, 4))],
)

show(
    "Pool sweep (grid 2x2, segment_len 5): summary length vs receptive field",
    [
        (f"pool={h}x{w}", cfg(pool=(h, w)))
        for h, w in ((12, 12), (6, 6), (4, 4), (3, 4), (3, 3), (2, 3), (2, 2))
    ],
)
