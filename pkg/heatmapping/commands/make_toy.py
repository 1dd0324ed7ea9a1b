from heatmapping.artifacts import ArtifactWriter
from heatmapping.commands import arg, cli_command
from heatmapping.commands.options import OUT_ARGUMENT, SEED_ARGUMENT, output_dir
from heatmapping.toy import TOY_SAMPLES, TOY_SIZE, write_toy


@cli_command(
    name="make-toy",
    description="Generate the synthetic brightness dataset and a base model",
    arguments=[
        arg(
            "--samples",
            type=int,
            default=TOY_SAMPLES,
            help=f"Images (default: {TOY_SAMPLES})",
        ),
        arg(
            "--size",
            type=int,
            default=TOY_SIZE,
            help=f"Image side (default: {TOY_SIZE})",
        ),
        SEED_ARGUMENT,
        OUT_ARGUMENT,
    ],
)
def make_toy(args) -> int:
    out = output_dir(args)
    with ArtifactWriter(out, "make-toy") as writer:
        write_toy(writer.staging, samples=args.samples, seed=args.seed, size=args.size)
        writer.describe(
            config={"samples": args.samples, "size": args.size},
            seeds={"seed": args.seed},
        )
    return 0
