#!/usr/bin/env python3
"""End-to-end service walkthrough: start the HTTP service on fixture
backends, drive a scripted session over the REST API, stop the server
mid-session, and watch a restarted instance resume from the durable log."""

import tempfile
from pathlib import Path

import requests

from hapticvlm.config import load_config
from hapticvlm.fixtures import write_fixture_workspace
from hapticvlm.service import ServiceServer

workspace = Path(tempfile.mkdtemp(prefix="live_session_"))
config_path = write_fixture_workspace(workspace)

server = ServiceServer(load_config(config_path)).start()
url = server.url
print("service:", requests.get(url + "/api/health", timeout=5).json())

# The service also exposes the recognition and temperature endpoints.
rec = requests.post(url + "/api/recognize", json={"image_ref": "img_metal.png"}, timeout=5).json()
print(f"\nrecognize img_metal.png -> {rec['match']['material']} "
      f"(audio {rec['match']['audio_key']})")
est = requests.post(url + "/api/temperature/estimate",
                    json={"image_ref": "img_cold_street.png"}, timeout=5).json()
print(f"estimate img_cold_street.png -> {est['celsius']} C, thermal mode {est['thermal_mode']}")

# Start a session and answer the first 10 trials (participant echoes the
# presented condition except on every 4th trial).
sid = requests.post(url + "/api/session",
                    json={"participant_id": "P01", "seed": 42}, timeout=5).json()["session_id"]
print(f"\nsession {sid}: running 10 of 50 trials")
for _ in range(10):
    trial = requests.get(f"{url}/api/session/{sid}/next", timeout=5).json()
    perceived = trial["presented"] if trial["trial_index"] % 4 else "GT-h"
    requests.post(f"{url}/api/session/{sid}/response",
                  json={"trial_index": trial["trial_index"], "perceived": perceived}, timeout=5)

print("thermal after trials:", requests.get(url + "/api/thermal", timeout=5).json())

# Stop the server entirely; the session log survives on disk.
server.stop()
print("\nserver stopped; restarting against the same log directory...")

revived = ServiceServer(load_config(config_path)).start()
url = revived.url
state = requests.get(f"{url}/api/session/{sid}/results", timeout=5).json()
print(f"resumed session {sid} at cursor {state['cursor']} (status {state['status']})")

for _ in range(50 - state["cursor"]):
    trial = requests.get(f"{url}/api/session/{sid}/next", timeout=5).json()
    perceived = trial["presented"] if trial["trial_index"] % 4 else "GT-h"
    requests.post(f"{url}/api/session/{sid}/response",
                  json={"trial_index": trial["trial_index"], "perceived": perceived}, timeout=5)

results = requests.get(f"{url}/api/session/{sid}/results", timeout=5).json()
print(f"\ncompleted: {results['cursor']}/50 trials")
print(f"mean diagonal recognition: {results['summary']['mean_diagonal']:.3f}")
print(f"best condition: {results['summary']['best_label']}")
revived.stop()
