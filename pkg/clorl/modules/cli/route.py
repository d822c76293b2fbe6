import argparse

from clorl import __version__
from clorl.core.exceptions import UsageException
from clorl.modules.algorithms.schema import Algorithm, HeadKind
from clorl.modules.categorical_value import ExpandKind
from clorl.modules.cli.controller import CliController
from clorl.modules.envs import ENV_REGISTRY, BehaviorKind
from clorl.modules.evaluation.eop import N_BOOTSTRAP


class CliArgumentParser(argparse.ArgumentParser):
    """Reports bad invocations as UsageException instead of exiting."""

    def error(self, message):
        raise UsageException(message=message, details={"usage": self.format_usage().strip()})


def _add_config_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="JSON config file (strict schema)")
    parser.add_argument("--preset", type=str, default=None, help="Name of a bundled preset in clorl/presets")
    parser.add_argument(
        "--set", action="append", default=None, metavar="KEY=VALUE",
        help="Dotted override applied last, e.g. rebrac.beta1=0.01 (value parsed as JSON)",
    )
    parser.add_argument("--force", action="store_true", help="Overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = CliArgumentParser(
        prog="clorl",
        description="Offline RL with classification (HL-Gauss) or regression critics on toy tasks",
        formatter_class=formatter,
    )
    parser.add_argument("--version", action="version", version=f"clorl {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    # ========== gen-data ==========
    gen = subparsers.add_parser("gen-data", help="Roll out a scripted policy into a CODS file", formatter_class=formatter)
    gen.add_argument("--env", choices=sorted(ENV_REGISTRY), default="pointmass", help="Toy environment")
    gen.add_argument("--behavior", choices=[k.value for k in BehaviorKind], default="expert", help="Behavior policy")
    gen.add_argument("--episodes", type=int, default=200, help="Number of episodes")
    gen.add_argument("--noise-std", type=float, default=0.1, help="Gaussian action noise of the scripted controllers")
    gen.add_argument("--seed", type=int, default=0, help="Random seed")
    gen.add_argument("--reward-scale", type=float, default=1.0,
                     help="Recorded in the header and applied at load (100 mirrors sparse-goal datasets)")
    gen.add_argument("--fixed-start", action="store_true", help="Start every episode at the env's default state")
    gen.add_argument("-o", "--output", required=True, help="Output .cods path")
    gen.add_argument("--force", action="store_true", help="Overwrite an existing file")
    gen.set_defaults(handler=CliController.cmd_gen_data)

    # ========== train ==========
    tr = subparsers.add_parser("train", help="Train one configuration", formatter_class=formatter)
    _add_config_source(tr)
    tr.add_argument("--dataset", type=str, default=None, help="CODS file (required unless set by the config)")
    tr.add_argument("--env", choices=sorted(ENV_REGISTRY), default=None,
                    help="Evaluation env; defaults to the dataset's source env")
    tr.add_argument("--algorithm", choices=[a.value for a in Algorithm], default=None, help="Config default: rebrac")
    tr.add_argument("--head", choices=[h.value for h in HeadKind], default=None,
                    help="Critic head; ce needs the classification block. Config default: mse")
    tr.add_argument("--m", type=int, default=None, help="Number of bins; the published default is 101")
    tr.add_argument("--sigma-zeta", type=float, default=None,
                    help="HL-Gauss sigma in bin widths; the published default is 0.75")
    tr.add_argument("--v-expand", type=float, default=None,
                    help="Fractional support enlargement; published grid {-0.05, 0.05, 0.1}")
    tr.add_argument("--expand-strategy", choices=[k.value for k in ExpandKind], default=None,
                    help="Where v_expand is applied. Config default: both")
    tr.add_argument("--seed", type=int, default=None, help="Config default: 0")
    tr.add_argument("--n-steps", type=int, default=None, help="Gradient steps. Config default: 1000")
    tr.add_argument("--eval-every", type=int, default=None, help="Config default: 1000")
    tr.add_argument("--eval-episodes", type=int, default=None, help="Published protocol uses 10. Config default: 10")
    tr.add_argument("--log-every", type=int, default=None, help="Config default: 100")
    tr.add_argument("--fixed-eval-start", action="store_true", help="Evaluate from the env's default state")
    tr.add_argument("--sampled-eval", action="store_true", help="Evaluate Gaussian actors with sampled actions")
    tr.add_argument("--out", type=str, default=None, help="Run directory; defaults to $CLORL_OUT/<slug>")
    tr.set_defaults(handler=CliController.cmd_train)

    # ========== sweep ==========
    sw = subparsers.add_parser("sweep", help="Train every cell of a hyperparameter grid", formatter_class=formatter)
    _add_config_source(sw)
    sw.add_argument("--dataset", action="append", default=None, help="CODS file; repeat for a dataset group")
    sw.add_argument("--seeds", type=int, nargs="+", default=None, help="Seeds per cell (the study uses four)")
    sw.add_argument("--max-workers", type=int, default=None, help="Concurrent runs. Config default: 1")
    sw.add_argument("--out", type=str, default=None, help="Output directory; defaults to $CLORL_OUT/sweeps/<name>")
    sw.set_defaults(handler=CliController.cmd_sweep)

    # ========== eop ==========
    ep = subparsers.add_parser("eop", help="Expected Online Performance from score CSVs", formatter_class=formatter)
    ep.add_argument("scores", nargs="+", help="Score CSVs (dataset,fingerprint,seed,score or a bare score column)")
    ep.add_argument("--ks", type=int, nargs="+", default=[1], help="Policy budgets k")
    ep.add_argument("--dataset", action="append", default=None, help="Restrict the group to these dataset ids")
    ep.add_argument("--n-bootstrap", type=int, default=N_BOOTSTRAP, help="Seed-bootstrap resamples for the std")
    ep.add_argument("--seed", type=int, default=0, help="Bootstrap seed")
    ep.add_argument("-o", "--output", default=None, help="Write the k,mean,std CSV here")
    ep.add_argument("--force", action="store_true", help="Overwrite an existing output")
    ep.set_defaults(handler=CliController.cmd_eop)

    # ========== inspect ==========
    ins = subparsers.add_parser("inspect", help="Print a CODS header and its value support", formatter_class=formatter)
    ins.add_argument("path", help="CODS file")
    ins.add_argument("--gamma", type=float, default=0.99, help="Discount for the support bounds")
    ins.set_defaults(handler=CliController.cmd_inspect)

    return parser
