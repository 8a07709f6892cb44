# Licensed under the MIT License.
"""
Trial worker: runs tasks sent by the parent process over JSON-RPC.
"""

import json
import os
import pathlib
import sys
import traceback
from typing import Any, Dict


# **********************************************************
# Update sys.path before importing any bundled libraries.
# **********************************************************
def update_sys_path(path_to_add: str) -> None:
    """Add given path to `sys.path`."""
    if path_to_add not in sys.path and os.path.isdir(path_to_add):
        sys.path.insert(0, path_to_add)


update_sys_path(os.fspath(pathlib.Path(__file__).parent))


import vr_experiments as experiments  # noqa: E402
import vr_jsonrpc as jsonrpc  # noqa: E402
import vr_settings as settings  # noqa: E402

RPC = jsonrpc.create_json_rpc(sys.stdin.buffer, sys.stdout.buffer)
CONFIGS: Dict[str, settings.ExperimentConfig] = {}


def _config(payload: Dict[str, Any]) -> settings.ExperimentConfig:
    key = json.dumps(payload, sort_keys=True)
    if key not in CONFIGS:
        CONFIGS[key] = settings.structure_config(payload)
    return CONFIGS[key]


def handle_run(msg: Dict[str, Any]) -> Dict[str, Any]:
    """Runs the task in `msg` and builds the reply."""
    try:
        task = experiments.REPORT_CONVERTER.structure(msg["task"], experiments.Task)
        record = experiments.execute_task(task, _config(msg["config"]))
    except Exception:
        return {"id": msg["id"], "error": traceback.format_exc(chain=True)}
    return {"id": msg["id"], "result": experiments.REPORT_CONVERTER.unstructure(record)}


while True:
    try:
        message = RPC.receive_data()
    except EOFError:
        break
    if message["method"] == "exit":
        break
    if message["method"] == "run":
        RPC.send_data(handle_run(message))
