import json
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
)
from heatmapping.logger import get_logger
from heatmapping.lrp.engine import explain
from heatmapping.net.serialization import blob_path_for, load_model
from heatmapping.render import render, side_by_side, write_image
from heatmapping.training.data import image_to_input, load_image

logger = get_logger(__name__)


@cli_command(
    name="compare",
    description="Explain one image under two models and render both on one scale",
    arguments=[
        arg("--model-a", type=Path, required=True, help="First model manifest"),
        arg("--model-b", type=Path, required=True, help="Second model manifest"),
        arg("--image", type=Path, required=True, help="Input image"),
        *RULE_ARGUMENTS,
        SCALE_ARGUMENT,
        SEED_ARGUMENT,
        OUT_ARGUMENT,
    ],
)
def compare(args) -> int:
    cfg = lrp_config(args)
    with ArtifactWriter(output_dir(args), "compare") as writer:
        image = load_image(args.image)
        x = image_to_input(image)
        maps = [
            explain(load_model(path), x, cfg) for path in (args.model_a, args.model_b)
        ]

        render_cfg = shared_render_config(args.scale, [m.heatmap for m in maps])

        rendered = [render(m.heatmap, render_cfg) for m in maps]
        write_image(rendered[0], writer.path("heatmap_a.ppm"))
        write_image(rendered[1], writer.path("heatmap_b.ppm"))
        write_image(side_by_side(rendered), writer.path("compare.png"))
        summary = {
            "scale": render_cfg.scale,
            "score_a": maps[0].score,
            "score_b": maps[1].score,
        }
        writer.path("scores.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
        writer.describe(
            config={
                "lrp": cfg.model_dump(mode="json"),
                "render": render_cfg.model_dump(mode="json"),
            },
            seeds={"seed": args.seed},
            inputs={
                "model_a": args.model_a,
                "model_a_blob": blob_path_for(args.model_a),
                "model_b": args.model_b,
                "model_b_blob": blob_path_for(args.model_b),
                "image": args.image,
            },
        )

    logger.info(
        f"📊 Scores {maps[0].score:.6g} vs {maps[1].score:.6g} "
        f"on scale {render_cfg.scale}"
    )
    return 0
