import argparse
import logging
import os
import sys
import uuid
from typing import Optional, Sequence

from .config import settings
from .models.enums import PolicyKind
from .services.report_service import compare, emit_outputs
from .services.rl_service import save_policy
from .services.scenario_service import default_scenario, load_scenario, validate
from .services.simulator_service import run
from .services.training_service import train_rl
from .utils.error_handlers import UsageError, ValidationError, handle_cli_error

logger = logging.getLogger(__name__)

POLICY_NAMES = [p.value for p in PolicyKind]

def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds

def _policy_list(text: str) -> list[str]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [n for n in names if n not in POLICY_NAMES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"unknown policies {unknown}; choose from {POLICY_NAMES}")
    return names

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isatn-sim",
        description="Carbon-aware orchestration simulator for integrated satellite-aerial-terrestrial networks.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def scenario_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", default=None,
                       help="Scenario JSON file (default: built-in seven-day scenario).")

    p = sub.add_parser("run", help="Run one policy for one seed.")
    scenario_arg(p)
    p.add_argument("--policy", required=True, choices=POLICY_NAMES)
    p.add_argument("--seed", type=int, default=None, help="Run seed (default: scenario seed).")
    p.add_argument("--out", default=settings.default_out_dir, help="Output directory.")
    p.add_argument("--policy-file", default=None, help="Trained policy for mpc_rl.")
    p.add_argument("--beam-width", type=int, default=None)

    p = sub.add_parser("train-rl", help="Train the real-time corrective agent and save its policy file.")
    scenario_arg(p)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=None, help="Days per training episode.")
    p.add_argument("--out", default=settings.policy_file, help="Policy file to write.")

    p = sub.add_parser("compare", help="Run several policies over several seeds.")
    scenario_arg(p)
    p.add_argument("--policies", type=_policy_list, default=POLICY_NAMES,
                   help="Comma-separated policy names.")
    p.add_argument("--seeds", type=_seed_list, required=True, help="Comma-separated seeds, e.g. 1,2,3.")
    p.add_argument("--out", default=settings.default_out_dir)
    p.add_argument("--policy-file", default=None)
    p.add_argument("--reference", default=PolicyKind.QOS.value, choices=POLICY_NAMES)
    p.add_argument("--beam-width", type=int, default=None)

    p = sub.add_parser("validate", help="Check a scenario file.")
    scenario_arg(p)
    return parser

def _scenario(path: Optional[str]):
    if path is None:
        return default_scenario()
    return load_scenario(path)

def _check_beam_width(args: argparse.Namespace) -> None:
    width = getattr(args, "beam_width", None)
    if width is not None and width < 1:
        raise UsageError(f"--beam-width must be >= 1, got {width}", field="beam_width")

def _run(args: argparse.Namespace) -> None:
    spec = _scenario(args.scenario)
    seed = spec.seed if args.seed is None else args.seed
    result = run(spec, args.policy, seed, policy_file=args.policy_file, beam_width=args.beam_width)
    for path in emit_outputs(result, args.out):
        print(path)

def _train(args: argparse.Namespace) -> None:
    spec = _scenario(args.scenario)
    if args.episodes is not None and args.episodes < 0:
        raise UsageError("--episodes must be >= 0", field="episodes")
    episodes = spec.orchestration.rl.episodes if args.episodes is None else args.episodes
    agent = train_rl(spec, episodes=episodes, seed=args.seed, days=args.days)
    print(save_policy(agent, spec.orchestration.rl, args.out, episodes=episodes, seed=args.seed))

def _compare(args: argparse.Namespace) -> None:
    spec = _scenario(args.scenario)
    compare(spec, args.policies, args.seeds, args.out, policy_file=args.policy_file,
            reference=args.reference, beam_width=args.beam_width)
    print(os.path.join(args.out, "comparison.json"))

def _validate(args: argparse.Namespace) -> None:
    spec = _scenario(args.scenario)
    violations = validate(spec)
    if violations:
        raise ValidationError(violations=violations, field=violations[0].split(":")[0])
    print("OK")

COMMANDS = {"run": _run, "train-rl": _train, "compare": _compare, "validate": _validate}

def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv` and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse has already printed usage to stderr
        return int(e.code or 0)

    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    run_id = str(uuid.uuid4())
    try:
        _check_beam_width(args)
        COMMANDS[args.command](args)
    except Exception as e:
        return handle_cli_error(e, run_id)
    return 0

def main() -> None:
    sys.exit(cli())
