from pathlib import Path

from heatmapping.artifacts import ArtifactWriter
from heatmapping.commands import arg, cli_command
from heatmapping.commands.options import OUT_ARGUMENT, SEED_ARGUMENT, output_dir
from heatmapping.logger import get_logger
from heatmapping.net.serialization import blob_path_for, load_model, save_model
from heatmapping.training.data import load_dataset
from heatmapping.training.trainer import TrainConfig, TrainingMode, train

logger = get_logger(__name__)


@cli_command(
    name="train",
    description="Retrain a base model on a labeled image directory",
    arguments=[
        arg("--model", type=Path, required=True, help="Base model manifest (.json)"),
        arg("--data-dir", type=Path, required=True, help="Directory of images"),
        arg(
            "--labels",
            type=Path,
            required=True,
            help="filename,attribute,raw_score CSV",
        ),
        arg("--attribute", default=None, help="Only use rows of this attribute"),
        arg(
            "--mode",
            choices=[m.value for m in TrainingMode],
            default=TrainingMode.DENSE_ONLY.value,
            help="Which layers to update (default: dense-only)",
        ),
        arg("--lr", type=float, default=0.001, help="Learning rate (default: 0.001)"),
        arg(
            "--momentum",
            type=float,
            default=0.9,
            help="Nesterov momentum (default: 0.9)",
        ),
        arg("--epochs", type=int, default=30, help="Epochs (default: 30)"),
        arg("--batch-size", type=int, default=4, help="Minibatch size (default: 4)"),
        arg(
            "--keep-head",
            dest="replace_head",
            action="store_false",
            help="Keep the base head instead of swapping in a fresh single output",
        ),
        SEED_ARGUMENT,
        OUT_ARGUMENT,
    ],
)
def train_command(args) -> int:
    """Retrain a base model and write it with its learning curve."""
    cfg = TrainConfig(
        learning_rate=args.lr,
        momentum=args.momentum,
        mode=TrainingMode(args.mode),
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        replace_head=args.replace_head,
    )
    with ArtifactWriter(output_dir(args), "train") as writer:
        net = load_model(args.model)
        ds = load_dataset(args.data_dir, args.labels, net.input_shape, args.attribute)
        trained, curve = train(net, ds, cfg)

        save_model(trained, writer.path("model.json"))
        curve.to_csv(writer.path("curve.csv"))
        writer.describe(
            config={**cfg.model_dump(mode="json"), "attribute": args.attribute},
            seeds={"seed": cfg.seed},
            inputs={
                "model": args.model,
                "model_blob": blob_path_for(args.model),
                "labels": args.labels,
            },
        )
        if curve.points:
            last = curve.points[-1]
            logger.info(
                f"✅ Final train MAE {last.train_mae:.4f}, "
                f"test MAE {last.test_mae:.4f}"
            )
    return 0
