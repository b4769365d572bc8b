"""
Command line entry: ``skillrl <command> [options]``.

Every command resolves the configuration (profile, then ``--config`` file, then ``--set``
overrides), opens a run directory under ``$SKILLRL_RUN_ROOT`` and writes its checkpoints and
CSV files there. Exit status is 0 on success, 1 on any library error and 2 on usage errors.
"""

from typing import Any, Dict, List, Optional, Sequence

import argparse
import os
import sys
import traceback

import numpy as np
import pandas as pd

from SkillRL.active import (
    assign_sampling_weights,
    augment_dataset,
    bin_report,
    compute_task_score,
    estimate_performance,
    generated_ratio,
    make_bins,
    original_clips,
    score_weights,
)
from SkillRL.align import AlignConfig, FeatureAligner, fit_feature_stats, load_feature_stats, save_feature_stats
from SkillRL.analysis import evaluate_success, interpolated_reach_dataset, per_bin_report, pilot_study, reference_walk_likeness
from SkillRL.data import Dataset, load_dataset, reference_walk_dataset, save_dataset
from SkillRL.env import Character
from SkillRL.exp import RunContext, derive_seed, parse_args, setup
from SkillRL.logger import logger
from SkillRL.misc.errors import ConfigError, SkillRLError
from SkillRL.rl.critic import TAP_NAMES
from SkillRL.skill.features import dataset_sequences
from SkillRL.skill.space import SkillSpace, freeze, load_skill_space
from SkillRL.skill.trainer import SkillTrainer
from SkillRL.task.policy import HighLevelPolicy, load_task_policy
from SkillRL.task.trainer import TaskTrainer

COMMANDS = ("gen-data", "train-space", "tune-space", "train-task", "augment", "evaluate", "pilot", "pipeline")
STATS_FILE = "feature_stats.skf"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skillrl", description="Latent skill space training with active augmentation.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="yaml or json file overriding the profile")
    parser.add_argument("--profile", default=None, choices=("desk", "paper"))
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted config override, repeatable")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--run-name", default=None, help="exact run directory name")
    parser.add_argument("--force", action="store_true", help="load checkpoints written under another config")
    parser.add_argument("--iters", type=int, default=None, help="training iterations")
    parser.add_argument("--episodes", type=int, default=None, help="evaluation episodes")
    parser.add_argument("--checkpoint", default=None, help="skill-space checkpoint")
    parser.add_argument("--walk-checkpoint", default=None, help="walking-only skill-space checkpoint for the alignment critic")
    parser.add_argument("--policy", default=None, help="task-policy checkpoint")
    parser.add_argument("--data", default=None, help="directory of clip files to train on")
    parser.add_argument("--reference", default=None, help="directory of walking reference clips")
    parser.add_argument("--stats", default=None, help="walking feature statistics")
    return parser


# helpers
def _require(args: argparse.Namespace, name: str, command: str) -> str:
    value = getattr(args, name.replace("-", "_"))
    if value is None:
        raise ConfigError(f"--{name}", f"{command} needs --{name}")
    return value


def _checkpoint_dir(ctx: RunContext) -> str:
    path = os.path.join(ctx.run_dir, "checkpoints")
    os.makedirs(path, exist_ok=True)
    return path


def _reference(args: argparse.Namespace, config: Any, character: Character) -> Dataset:
    if args.reference:
        return load_dataset(args.reference)
    return reference_walk_dataset(config, character=character)


def _space(args: argparse.Namespace, ctx: RunContext, path: Optional[str]=None) -> SkillSpace:
    space, _ = load_skill_space(path or _require(args, "checkpoint", "this command"), ctx.config, ctx.config_hash, args.force)
    return freeze(space)


def _policy(args: argparse.Namespace, ctx: RunContext, required: bool=True) -> Optional[HighLevelPolicy]:
    if args.policy is None and not required:
        return None
    policy, _ = load_task_policy(_require(args, "policy", "this command"), ctx.config, ctx.config_hash, args.force)
    return policy.eval()


def _fit_stats(space: SkillSpace, config: Any, character: Character, walk: Dataset):
    align = config["align"]
    sequences = dataset_sequences(character, walk, space.disc_enc, space.latent_dim)
    return fit_feature_stats(space.critic, sequences, TAP_NAMES, int(align["window"]), float(align["epsilon"]))


# commands
def gen_data(args: argparse.Namespace, ctx: RunContext, tag: str="gen_data") -> Dict[str, Any]:
    """Write the walking reference, its held-out twin and a set of generated reach clips. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    root = args.data or os.path.join(ctx.run_dir, "data")
    walk = reference_walk_dataset(config, character=character)
    heldout = reference_walk_dataset(config, np.random.default_rng(derive_seed(ctx.seed, "gen.heldout")), heldout=True, character=character)
    reach = interpolated_reach_dataset(
        config, np.random.default_rng(derive_seed(ctx.seed, "gen.reach")), int(config["analysis"]["pilot_samples"]), character,
    )
    paths = {}
    for name, dataset in (("walk", walk), ("heldout", heldout), ("reach", reach)):
        paths[name] = os.path.join(root, name)
        save_dataset(dataset, paths[name])
        ctx.logger.info(f"{len(dataset)} clips ({sum(len(c) for c in dataset)} frames) written to {paths[name]}")
    ctx.logger.log_scalars(tag, {"walk_clips": len(walk), "heldout_clips": len(heldout), "reach_clips": len(reach)}, step=0)
    return paths


def train_space(args: argparse.Namespace, ctx: RunContext, tag: str="skill") -> Dict[str, Any]:
    """Train the skill space, then fit the walking feature statistics of its critic. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    walk = _reference(args, config, character)
    dataset = load_dataset(args.data) if args.data else walk
    trainer = SkillTrainer(config, dataset, ctx.logger, ctx.seed, ctx.config_hash, character=character)
    if args.checkpoint:
        trainer.load(args.checkpoint, resume=True, force=args.force)
    iters = args.iters if args.iters is not None else int(config["skill"]["iterations"])
    ckpt_dir = _checkpoint_dir(ctx)
    path = trainer.train(iters, ckpt_dir, tag=tag)
    stats = _fit_stats(freeze(trainer.space), config, character, walk)
    stats_path = save_feature_stats(stats, os.path.join(ckpt_dir, f"{tag}_{STATS_FILE}"), {
        "config_hash": ctx.config_hash, "seed": ctx.seed, "checkpoint": path,
    })
    ctx.logger.info(f"skill space {path}, walking feature statistics {stats_path}")
    return {"checkpoint": path, "stats": stats_path}


def tune_space(args: argparse.Namespace, ctx: RunContext, tag: str="tune") -> Dict[str, Any]:
    """Continue training on an augmented dataset with the feature-alignment reward. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    start = _require(args, "checkpoint", "tune-space")
    dataset = load_dataset(_require(args, "data", "tune-space"))
    walking = _space(args, ctx, args.walk_checkpoint or start)
    if args.stats:
        stats = load_feature_stats(args.stats, ctx.config_hash, args.force)
    else:
        stats = _fit_stats(walking, config, character, _reference(args, config, character))
    aligner = FeatureAligner(walking.critic, stats, AlignConfig.from_config(config["align"]))
    trainer = SkillTrainer(config, dataset, ctx.logger, ctx.seed, ctx.config_hash, aligner=aligner, character=character)
    trainer.load(start, resume=False, force=args.force)
    iters = args.iters if args.iters is not None else int(config["skill"]["iterations"])
    path = trainer.train(iters, _checkpoint_dir(ctx), tag=tag)
    ctx.logger.info(f"tuned skill space {path}")
    return {"checkpoint": path}


def _estimate_bins(policy: HighLevelPolicy, space: SkillSpace, ctx: RunContext, character: Character, stream: str):
    active = ctx.config["active"]
    bins = make_bins(active["height_range"], int(active["num_bins"]))
    estimate_performance(
        policy, space, ctx.config, bins, int(active["episodes_per_bin"]), derive_seed(ctx.seed, stream), character,
    )
    return bins


def train_task(args: argparse.Namespace, ctx: RunContext, tag: str="task") -> Dict[str, Any]:
    """Train the high-level policy over a frozen skill space and report SR(Grasp) per table-height bin. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    space = _space(args, ctx)
    trainer = TaskTrainer(config, space, _reference(args, config, character), ctx.logger, ctx.seed, ctx.config_hash, character)
    if args.policy:
        trainer.load(args.policy, resume=True, force=args.force)
    iters = args.iters if args.iters is not None else int(config["task"]["iterations"])
    path = trainer.train(iters, _checkpoint_dir(ctx), tag=tag)
    bins = _estimate_bins(trainer.policy.eval(), space, ctx, character, f"{tag}.bins")
    ctx.logger.log_frame(bin_report(bins), f"{tag}_bins.csv")
    ctx.logger.info(f"task policy {path}, mean SR(Grasp) over bins {np.mean([b.sr for b in bins]):.3f}")
    return {"policy": path, "bins": bins}


def augment(args: argparse.Namespace, ctx: RunContext, tag: str="augment") -> Dict[str, Any]:
    """Score the table-height bins with the current policies and add generated clips where they do worst. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    active = config["active"]
    space, policy = _space(args, ctx), _policy(args, ctx)
    dataset = load_dataset(args.data) if args.data else _reference(args, config, character)
    bins = _estimate_bins(policy, space, ctx, character, f"{tag}.bins")
    strategy = active["strategy"]
    compute_task_score(bins, *score_weights(active, strategy))
    assign_sampling_weights(bins, float(active["data_ratio"]), original_clips(dataset).total_weight, strategy)
    augmented = augment_dataset(dataset, bins, config, derive_seed(ctx.seed, f"{tag}.clips"), character)
    out = os.path.join(ctx.run_dir, f"{tag}_data")
    save_dataset(augmented, out)
    ctx.logger.log_frame(bin_report(bins), f"{tag}_bins.csv")
    ctx.logger.log_scalars(tag, {
        "clips": len(augmented), "generated_clips": len(augmented) - len(original_clips(augmented)),
        "data_ratio": generated_ratio(augmented), "mean_sr": float(np.mean([b.sr for b in bins])),
    }, step=0)
    ctx.logger.info(f"augmented dataset with {len(augmented)} clips written to {out}")
    return {"data": out, "bins": bins, "mean_sr": float(np.mean([b.sr for b in bins]))}


def evaluate(args: argparse.Namespace, ctx: RunContext, tag: str="evaluate") -> Dict[str, Any]:
    """SR(Grasp), SR(Goal), foot skate and walk-likeness, overall and per table-height bin. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    space, policy = _space(args, ctx), _policy(args, ctx)
    episodes = args.episodes if args.episodes is not None else int(config["analysis"]["episodes"])
    metrics, frame = evaluate_success(policy, space, config, episodes, ctx.seed, character=character)
    metrics["reference_walk_likeness"] = reference_walk_likeness(space, character, _reference(args, config, character))
    active = config["active"]
    bins = make_bins(active["height_range"], int(active["num_bins"]))
    ctx.logger.log_frame(pd.DataFrame([metrics]), f"{tag}.csv")
    ctx.logger.log_frame(frame, f"{tag}_episodes.csv")
    ctx.logger.log_frame(per_bin_report(frame, bins), f"{tag}_bins.csv")
    ctx.logger.info(
        f"SR(Grasp) {metrics['sr_grasp']:.3f}, SR(Goal) {metrics['sr_goal']:.3f}, foot skate {metrics['foot_skate']:.3f}"
    )
    return metrics


def pilot(args: argparse.Namespace, ctx: RunContext, tag: str="pilot") -> Dict[str, Any]:
    """Per-tap FID of walking and reaching sets against the training walk. """
    config, character = ctx.config, Character.from_config(ctx.config["character"])
    space, policy = _space(args, ctx), _policy(args, ctx, required=False)
    table, export = pilot_study(space, config, ctx.seed, character, policy, _reference(args, config, character))
    paths = {"fid": ctx.logger.log_frame(table, f"{tag}_fid.csv"), "features": ctx.logger.log_frame(export, f"{tag}_features.csv")}
    ctx.logger.info(f"FID table {paths['fid']}")
    return paths


def pipeline(args: argparse.Namespace, ctx: RunContext, tag: str="pipeline") -> Dict[str, Any]:
    """
    train-space, train-task, then rounds of estimate / augment / tune-space / train-task until
    `active.iterations` rounds ran or the mean SR(Grasp) over bins stops improving by at least
    `active.min_improvement`; finally evaluate.
    """
    active = ctx.config["active"]

    def step(**kwargs) -> argparse.Namespace:
        values = dict(vars(args))
        values.update(checkpoint=None, walk_checkpoint=None, policy=None, data=None, stats=None)
        values.update(kwargs)
        return argparse.Namespace(**values)

    skill = train_space(step(data=args.data), ctx, tag="skill")
    walking = skill["checkpoint"]
    current = walking
    task = train_task(step(checkpoint=current), ctx, tag="task_r0")
    previous_sr = None
    for k in range(int(active["iterations"])):
        aug = augment(step(checkpoint=current, policy=task["policy"], data=args.data), ctx, tag=f"augment_r{k}")
        if previous_sr is not None and aug["mean_sr"] - previous_sr < float(active["min_improvement"]):
            ctx.logger.info(f"mean SR(Grasp) {aug['mean_sr']:.3f} after round {k}, below the improvement threshold")
            break
        previous_sr = aug["mean_sr"]
        tuned = tune_space(
            step(checkpoint=current, walk_checkpoint=walking, data=aug["data"], stats=skill["stats"]), ctx, tag=f"tune_r{k}",
        )
        current = tuned["checkpoint"]
        task = train_task(step(checkpoint=current), ctx, tag=f"task_r{k + 1}")
    metrics = evaluate(step(checkpoint=current, policy=task["policy"]), ctx)
    return {"checkpoint": current, "policy": task["policy"], "metrics": metrics}


HANDLERS = {
    "gen-data": gen_data,
    "train-space": train_space,
    "tune-space": tune_space,
    "train-task": train_task,
    "augment": augment,
    "evaluate": evaluate,
    "pilot": pilot,
    "pipeline": pipeline,
}


def run_command(argv: Optional[Sequence[str]]=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2
    overrides: List[str] = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    ctx = None
    try:
        config = parse_args(args.config, args.profile, overrides)
        ctx = setup(config, args.command, args.run_name)
        HANDLERS[args.command](args, ctx)
        return 0
    except SkillRLError as e:
        (ctx.logger if ctx is not None else logger).error(f"{args.command}: {e}")
        return 1
    except Exception:
        (ctx.logger if ctx is not None else logger).error(traceback.format_exc())
        return 1
    finally:
        if ctx is not None:
            ctx.logger.close()


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
