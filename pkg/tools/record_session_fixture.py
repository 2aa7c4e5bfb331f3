"""Record a real 3-era session transcript for the cockpit's tests.

Drives the actual decision service (in-process) through a small instance,
deciding with the 0.5-strategy ghost index each era, and writes every state
payload plus the acknowledgments the cockpit will replay in its tests.
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from dynvrp.instance import GeneratorConfig, generate_instance, save_instance
from dynvrp.session import SessionManager, create_app

OUT = Path(sys.argv[1] if len(sys.argv) > 1 else "frontend/src/__fixtures__")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    work = OUT / "_work"
    work.mkdir(exist_ok=True)
    inst = generate_instance(
        GeneratorConfig(n_total=10, dynamic_ratio=0.5, seed=23, request_horizon=400.0, bounding_box=100.0)
    )
    save_instance(inst, work / "instance.json")
    manager = SessionManager()
    app = create_app(manager, instance_dir=work)
    transcript = {"create": None, "eras": [], "final": None}
    with TestClient(app) as client:
        resp = client.post(
            "/sessions",
            json={
                "instance_file": "instance.json",
                "n_vehicles": 2,
                "n_eras": 3,
                "seed": 3,
                "mu": 8,
                "evals_per_era": 160,
            },
        )
        sid = resp.json()["session_id"]
        transcript["create"] = resp.json()
        for _ in range(3):
            manager.wait(sid, timeout=60.0)
            state = client.get(f"/sessions/{sid}").json()
            assert state["status"] == "awaiting_decision", state["status"]
            index = state["decision"]["strategy_ghosts"]["0.75"]
            ack = client.post(f"/sessions/{sid}/decision", json={"index": index}).json()
            transcript["eras"].append({"state": state, "decided_index": index, "ack": ack})
        manager.wait(sid, timeout=60.0)
        transcript["final"] = client.get(f"/sessions/{sid}").json()
    (OUT / "session_transcript.json").write_text(json.dumps(transcript, indent=1))
    for f in work.iterdir():
        f.unlink()
    work.rmdir()
    print(f"wrote {OUT / 'session_transcript.json'}")


if __name__ == "__main__":
    main()
