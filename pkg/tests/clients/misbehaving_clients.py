"""Scripted stdio clients that violate the protocol (selected by argv[1]).

    early_act   sends an act frame before any observe arrives
    sleepy      completes the handshake, then never answers observations
    bad_action  answers observations with an unknown action name
"""

import json
import sys
import time


def main():
    mode = sys.argv[1]
    out = sys.stdout
    if mode == "early_act":
        out.write(json.dumps({"kind": "act", "action": "MOVE_FORWARD"}) + "\n")
        out.flush()
        for _ in sys.stdin:
            pass
        return
    for line in sys.stdin:
        msg = json.loads(line)
        kind = msg.get("kind")
        if kind == "hello":
            out.write(json.dumps({"kind": "hello", "version": 1}) + "\n")
            out.flush()
        elif kind == "observe":
            if mode == "sleepy":
                time.sleep(30.0)
                return
            if mode == "bad_action":
                out.write(json.dumps({"kind": "act", "action": "FLY"}) + "\n")
                out.flush()
        elif kind == "error":
            return


if __name__ == "__main__":
    main()
