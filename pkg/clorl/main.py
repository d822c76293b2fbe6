import json
import sys
from typing import List, Optional

from clorl.config.logging_config import setup_logging
from clorl.core.exception_handlers import handle_exception
from clorl.modules.cli.route import build_parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return its exit code.
    Success payloads go to stdout, error payloads to stderr, both as JSON.
    """
    command = (argv if argv is not None else sys.argv[1:])[:1]
    command = command[0] if command else "clorl"
    try:
        args = build_parser().parse_args(argv)
        setup_logging()
        payload = args.handler(args)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except Exception as exc:
        exit_code, payload = handle_exception(command, exc)
        print(json.dumps(payload, indent=2, default=str), file=sys.stderr)
        return exit_code

    print(json.dumps(payload, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
