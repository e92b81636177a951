"""Stdio entry point: `python -m navclient [tcp:<host>:<port>]`.

With no argument, serves the greedy example policy over stdin/stdout (the
transport used when the simulator spawns the policy itself); with a tcp
spec it connects out to a listening simulator instead.
"""

import sys

from navclient.greedy import run
from navclient.session import SessionError, connect


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    spec = argv[0] if argv else "stdio"
    try:
        session = connect(spec)
        run(session)
    except SessionError as exc:
        print(f"session ended with error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
