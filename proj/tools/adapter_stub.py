#!/usr/bin/env python3
"""Reference implementation of the figdet backend adapter protocol.

Speaks line-delimited JSON on stdin/stdout (see docs/backend_protocol.md).
The "model" memorizes input->target pairs from fit_step, which is enough
to exercise the protocol end to end and to act as an external oracle in
tests. A real adapter would wrap an actual seq2seq model the same way.
"""

import json
import math
import sys


def main() -> None:
    memory: dict[str, str] = {}
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req["op"]
            if op == "fit_step":
                batch = req["batch"]
                if not batch:
                    raise ValueError("empty batch")
                known = sum(1 for item in batch
                            if memory.get(item["input"]) == item["target"])
                for item in batch:
                    memory[item["input"]] = item["target"]
                loss = 0.0 if known == len(batch) else math.log(2.0)
                resp = {"ok": True, "loss": loss}
            elif op == "generate":
                outputs = [memory.get(text) for text in req["inputs"]]
                resp = {"ok": True, "outputs": outputs}
            elif op == "save":
                with open(req["path"], "w", encoding="utf-8") as fh:
                    json.dump(memory, fh)
                resp = {"ok": True}
            elif op == "load":
                with open(req["path"], encoding="utf-8") as fh:
                    memory = json.load(fh)
                resp = {"ok": True}
            elif op == "shutdown":
                print(json.dumps({"ok": True}), flush=True)
                return
            else:
                resp = {"ok": False, "error": f"unknown op {op!r}"}
        except Exception as exc:  # noqa: BLE001 - protocol reports all errors
            resp = {"ok": False, "error": str(exc)}
        print(json.dumps(resp), flush=True)


if __name__ == "__main__":
    main()
