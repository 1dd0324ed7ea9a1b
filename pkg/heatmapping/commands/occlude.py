from pathlib import Path

from heatmapping.artifacts import ArtifactWriter
from heatmapping.commands import arg, cli_command
from heatmapping.commands.options import (
    OUT_ARGUMENT,
    RULE_ARGUMENTS,
    SCALE_ARGUMENT,
    SEED_ARGUMENT,
    lrp_config,
    output_dir,
    shared_render_config,
    slug,
)
from heatmapping.logger import get_logger
from heatmapping.net.serialization import blob_path_for, load_model
from heatmapping.occlusion import load_specs, occlusion_sweep
from heatmapping.render import render, side_by_side, to_uint8, write_image
from heatmapping.training.data import load_image

logger = get_logger(__name__)


@cli_command(
    name="occlude",
    description="Re-score an image under occlusions and compare with its heatmap",
    arguments=[
        arg("--model", type=Path, required=True, help="Model manifest (.json)"),
        arg("--image", type=Path, required=True, help="Input image"),
        arg("--specs", type=Path, required=True, help="JSON list of occlusion specs"),
        *RULE_ARGUMENTS,
        SCALE_ARGUMENT,
        SEED_ARGUMENT,
        OUT_ARGUMENT,
    ],
)
def occlude(args) -> int:
    """
    Writes occlusion.csv, one heatmap per row under heatmaps/, and for each
    spec a panel of the occluded image next to its heatmap under panels/.
    """
    cfg = lrp_config(args)
    with ArtifactWriter(output_dir(args), "occlude") as writer:
        net = load_model(args.model)
        image = load_image(args.image)
        specs = load_specs(args.specs)
        report = occlusion_sweep(net, image, specs, cfg)
        report.to_csv(writer.path("occlusion.csv"))

        # occluded maps share the baseline scale
        render_cfg = shared_render_config(args.scale, [report.baseline_heatmap])

        if not specs:
            write_image(
                render(report.baseline_heatmap, render_cfg),
                writer.path("heatmaps/baseline.ppm"),
            )
        for k, (row, heatmap, occluded) in enumerate(
            zip(report.rows, report.heatmaps, report.images)
        ):
            stem = f"{k:02d}_{slug(row.name)}"
            rgb = render(heatmap, render_cfg)
            write_image(rgb, writer.path(f"heatmaps/{stem}.ppm"))
            panel = side_by_side([to_uint8(occluded), rgb])
            write_image(panel, writer.path(f"panels/{stem}.png"))
            logger.info(
                f"{row.name}: {row.baseline:.4g} -> {row.occluded:.4g} "
                f"(relevance inside {row.relevance_fraction:.1%})"
            )

        writer.describe(
            config={
                "lrp": cfg.model_dump(mode="json"),
                "render": render_cfg.model_dump(mode="json"),
                "specs": [spec.model_dump(mode="json") for spec in specs],
            },
            seeds={"seed": args.seed},
            inputs={
                "model": args.model,
                "model_blob": blob_path_for(args.model),
                "image": args.image,
                "specs": args.specs,
            },
        )
    return 0
