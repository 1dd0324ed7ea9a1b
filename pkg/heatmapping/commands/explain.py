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
    render_config,
)
from heatmapping.config import settings
from heatmapping.logger import get_logger
from heatmapping.lrp.engine import check_conservation, explain
from heatmapping.lrp.export import export_relevance
from heatmapping.net.serialization import blob_path_for, load_model
from heatmapping.render import overlay, render, write_image
from heatmapping.training.data import image_to_input, load_image

logger = get_logger(__name__)


@cli_command(
    name="explain",
    description="Compute and render the relevance heatmap of one image",
    arguments=[
        arg("--model", type=Path, required=True, help="Model manifest (.json)"),
        arg("--image", type=Path, required=True, help="Input image"),
        *RULE_ARGUMENTS,
        SCALE_ARGUMENT,
        arg(
            "--overlay",
            type=float,
            default=None,
            help="Also write the heatmap blended over the image with this alpha",
        ),
        SEED_ARGUMENT,
        OUT_ARGUMENT,
    ],
)
def explain_command(args) -> int:
    cfg = lrp_config(args)
    render_cfg = render_config(args.scale, args.overlay)
    with ArtifactWriter(output_dir(args), "explain") as writer:
        net = load_model(args.model)
        image = load_image(args.image)
        rel = explain(net, image_to_input(image), cfg)
        report = check_conservation(rel, rel.score, settings.CONSERVATION_TOL)

        heatmap = render(rel.heatmap, render_cfg)
        write_image(heatmap, writer.path("heatmap.ppm"))
        write_image(heatmap, writer.path("heatmap.png"))
        if render_cfg.overlay_alpha is not None:
            blended = overlay(image, heatmap, render_cfg.overlay_alpha)
            write_image(blended, writer.path("overlay.png"))
        export_relevance(
            rel, writer.path("relevance.bin"), writer.path("relevance.json")
        )
        writer.path("conservation.json").write_text(
            report.model_dump_json(indent=2) + "\n", encoding="utf-8"
        )
        writer.describe(
            config={
                "lrp": cfg.model_dump(mode="json"),
                "render": render_cfg.model_dump(mode="json"),
            },
            seeds={"seed": args.seed},
            inputs={
                "model": args.model,
                "model_blob": blob_path_for(args.model),
                "image": args.image,
            },
        )

    status = "✅" if report.passed else "⚠️"
    logger.info(
        f"{status} Score {rel.score:.6g}, conservation drift {report.drift:.3g}"
    )
    return 0
