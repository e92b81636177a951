"""Scripted stdio policy client that answers every observation with STOP."""

import json
import sys


def main():
    for line in sys.stdin:
        msg = json.loads(line)
        kind = msg.get("kind")
        if kind == "hello":
            sys.stdout.write(json.dumps({"kind": "hello", "version": 1}) + "\n")
        elif kind == "observe":
            sys.stdout.write(json.dumps({"kind": "act", "action": "STOP"}) + "\n")
        elif kind == "error":
            return
        else:
            continue
        sys.stdout.flush()


if __name__ == "__main__":
    main()
