"""Drive the environment through the wire protocol, the way an external
agent (any language) would: spawn the server as a subprocess over stdio,
send line-delimited requests, read one response per request.

Run:  python3 demos/05_wire_protocol.py
"""

import json
import os
import subprocess
import sys
import tempfile

import yaml

config = {
    "track": {"generator": "oval"},
    "episode": {"n_adversaries": 1, "context": [0.0, 0.0]},
}
with tempfile.NamedTemporaryFile("w", suffix=".yaml", delete=False) as f:
    yaml.safe_dump(config, f)
    config_path = f.name

proc = subprocess.Popen(
    [sys.executable, "-m", "racesim.cli", "serve", "--transport", "stdio",
     "--config", config_path],
    stdin=subprocess.PIPE,
    stdout=subprocess.PIPE,
    text=True,
    bufsize=1,
)


def ask(line: str) -> dict:
    proc.stdin.write(line + "\n")
    proc.stdin.flush()
    reply = json.loads(proc.stdout.readline())
    shown = line if len(line) < 70 else line[:70] + "..."
    print(f">>> {shown}")
    if reply["kind"] == "state":
        print(f"<<< state: reward={reply['reward']:+.3f} done={reply['done']} "
              f"progress={reply['info']['progress']:.4f} obs[0..3]="
              + ", ".join(f"{v:.3f}" for v in reply["obs"][:4]))
    else:
        print(f"<<< {json.dumps(reply)[:120]}")
    return reply


ask('{"kind":"spec"}')
ask('{"kind":"reset","seed":7,"context":[0.1,-0.1]}')
for _ in range(5):
    ask('{"kind":"step","action":[0.5,0.0]}')
ask('{"kind":"step","action":[0.5]}')  # malformed on purpose
ask('{"kind":"close"}')
proc.wait(timeout=30)
os.unlink(config_path)
print("server exited cleanly")
