"""Interactive decision sessions over a JSON request/response protocol.

A session wraps one dynamic run. The era loop executes on a worker thread and
parks at each decision point; `decide` hands an index to the waiting loop and
the session moves on to the next era. State payloads carry everything a
decision cockpit needs: the f1-sorted final population with objectives and
decoded tours, dominated flags, realized prefixes (irreversible), the era's
unserved upper bound, and the instance geometry.

Optional snapshots (one JSON file per session, rewritten after each decision)
allow a restarted service to resume a session by replaying its recorded
decisions, which is exact because runs are deterministic per seed.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigurationError
from .evolution import EvoParams
from .instance import Instance, load_instance, save_instance
from .orchestrator import (
    DecisionPrompt,
    EraRecord,
    Interactive,
    RunConfig,
    auto_pick,
    run_dynamic,
)

PROTOCOL_VERSION = 1

GHOST_STRATEGIES = (0.25, 0.5, 0.75)


class SessionNotFound(KeyError):
    pass


class SessionConflict(RuntimeError):
    """Raised when a command is illegal in the session's current state."""


class _Aborted(Exception):
    pass


@dataclass
class Session:
    id: str
    instance: Instance
    cfg: RunConfig
    status: str = "computing"  # computing | awaiting_decision | finished | aborted
    prompt: DecisionPrompt | None = None
    history: list[dict[str, Any]] = field(default_factory=list)
    records: list[EraRecord] = field(default_factory=list)
    decisions: list[int] = field(default_factory=list)
    error: str | None = None
    _decision_queue: "queue.Queue[int]" = field(default_factory=queue.Queue)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _thread: threading.Thread | None = None
    _abort: threading.Event = field(default_factory=threading.Event)


class SessionManager:
    """Owns all live sessions; every public method is thread-safe."""

    def __init__(self, snapshot_dir: str | Path | None = None):
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        if self.snapshot_dir:
            self.snapshot_dir.mkdir(parents=True, exist_ok=True)

    # -- lifecycle -----------------------------------------------------------

    def create(
        self,
        instance: Instance,
        cfg: RunConfig,
        session_id: str | None = None,
        replay: list[int] | None = None,
    ) -> Session:
        if not isinstance(cfg.dm_policy, Interactive):
            cfg = replace(cfg, dm_policy=Interactive())
        session = Session(id=session_id or uuid.uuid4().hex[:12], instance=instance, cfg=cfg)
        if replay:
            session.decisions = list(replay)
            for k in replay:
                session._decision_queue.put(k)
        with self._registry_lock:
            if session.id in self._sessions:
                raise SessionConflict(f"session {session.id} already exists")
            self._sessions[session.id] = session
        session._thread = threading.Thread(
            target=self._run, args=(session,), name=f"session-{session.id}", daemon=True
        )
        session._thread.start()
        return session

    def resume(self, session_id: str) -> Session:
        """Recreate a snapshotted session by replaying its decisions."""
        if not self.snapshot_dir:
            raise ConfigurationError("snapshot persistence is not enabled")
        path = self.snapshot_dir / f"{session_id}.json"
        if not path.exists():
            raise SessionNotFound(session_id)
        snap = json.loads(path.read_text())
        instance = load_instance(self.snapshot_dir / snap["instance_file"])
        cfg = _config_from_obj(snap["config"])
        with self._registry_lock:
            self._sessions.pop(session_id, None)
        return self.create(instance, cfg, session_id=session_id, replay=snap["decisions"])

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise SessionNotFound(session_id) from None

    def list_ids(self) -> list[dict[str, Any]]:
        with self._registry_lock:
            sessions = list(self._sessions.values())
        return [
            {
                "id": s.id,
                "status": s.status,
                "instance": s.instance.name,
                "era": s.prompt.era_index if s.prompt else len(s.history),
                "n_eras": s.cfg.n_eras,
            }
            for s in sessions
        ]

    # -- commands ------------------------------------------------------------

    def decide(self, session_id: str, index: int) -> dict[str, Any]:
        session = self.get(session_id)
        with session._lock:
            if session.status != "awaiting_decision":
                raise SessionConflict(
                    f"session is {session.status}; decisions are only accepted while awaiting"
                )
            prompt = session.prompt
            mu = prompt.mu
            if not 1 <= index <= mu:
                raise ValueError(f"index {index} outside the valid range 1..{mu}")
            session.decisions.append(index)
            session.history.append(_interim_history(prompt, index))
            session.status = "computing"
            session.prompt = None
            era = prompt.era_index
            session._decision_queue.put(index)
        self._snapshot(session)
        return {"session_id": session_id, "era": era, "accepted_index": index}

    def abort(self, session_id: str) -> None:
        session = self.get(session_id)
        with session._lock:
            if session.status in ("finished", "aborted"):
                return
            session._abort.set()
            if session.status == "awaiting_decision":
                session.status = "computing"
                session.prompt = None
                session._decision_queue.put(-1)  # wake the waiting loop

    def wait(self, session_id: str, timeout: float | None = None) -> None:
        """Block until the session leaves the computing state (testing aid)."""
        session = self.get(session_id)
        deadline = time.monotonic() + timeout if timeout else None
        while session.status == "computing":
            if deadline and time.monotonic() > deadline:
                raise TimeoutError(f"session {session_id} still computing")
            thread = session._thread
            if thread is not None and not thread.is_alive():
                break
            time.sleep(0.005)

    # -- state payloads --------------------------------------------------------

    def get_state(self, session_id: str) -> dict[str, Any]:
        session = self.get(session_id)
        with session._lock:
            payload: dict[str, Any] = {
                "protocol_version": PROTOCOL_VERSION,
                "session_id": session.id,
                "status": session.status,
                "instance": _instance_obj(session.instance),
                "config": _config_obj(session.cfg),
                "n_eras": session.cfg.n_eras,
                "history": list(session.history),
                "error": session.error,
            }
            if session.prompt is not None:
                payload["decision"] = _prompt_obj(session.prompt)
            return payload

    def era_records(self, session_id: str) -> list[EraRecord]:
        """Authoritative records of a finished session."""
        session = self.get(session_id)
        with session._lock:
            if session.status != "finished":
                raise SessionConflict("records are available once the session finished")
            return list(session.records)

    # -- internals -------------------------------------------------------------

    def _run(self, session: Session) -> None:
        def dm(prompt: DecisionPrompt) -> int:
            with session._lock:
                if session._abort.is_set():
                    raise _Aborted
                session.status = "awaiting_decision"
                session.prompt = prompt
            k = session._decision_queue.get()
            with session._lock:
                if session._abort.is_set():
                    raise _Aborted
                # replayed decisions bypass decide(): keep state + history whole
                session.status = "computing"
                session.prompt = None
                if len(session.history) < prompt.era_index:
                    session.history.append(_interim_history(prompt, k))
            return k

        try:
            records = run_dynamic(session.instance, session.cfg, dm)
        except _Aborted:
            with session._lock:
                session.status = "aborted"
            return
        except Exception as e:  # surfaced to the client, never crashes the service
            with session._lock:
                session.status = "aborted"
                session.error = f"{type(e).__name__}: {e}"
            return
        with session._lock:
            if session._abort.is_set():
                session.status = "aborted"
                return
            session.records = records
            session.history = [r.to_json_obj() for r in records]
            for entry in session.history:
                entry.pop("run_id", None)
            session.status = "finished"
        self._snapshot(session)

    def _snapshot(self, session: Session) -> None:
        if not self.snapshot_dir:
            return
        inst_file = f"{session.id}-instance.json"
        inst_path = self.snapshot_dir / inst_file
        if not inst_path.exists():
            save_instance(session.instance, inst_path)
        with session._lock:
            snap = {
                "session_id": session.id,
                "instance_file": inst_file,
                "config": _config_obj(session.cfg),
                "decisions": list(session.decisions),
            }
        tmp = self.snapshot_dir / f"{session.id}.json.tmp"
        tmp.write_text(json.dumps(snap, indent=1))
        tmp.replace(self.snapshot_dir / f"{session.id}.json")


# -- payload builders ----------------------------------------------------------


def _interim_history(prompt: DecisionPrompt, index: int) -> dict[str, Any]:
    f1, f2 = prompt.front.objectives[index - 1]
    plan = prompt.plan_of(index)
    return {
        "era": prompt.era_index,
        "t": prompt.t,
        "front": [{"f1": p[0], "f2": p[1]} for p in prompt.front.points],
        "chosen_index": index,
        "chosen_plan": [list(tour) for tour in plan.tours],
        "chosen_objectives": {"f1": f1, "f2": f2},
        "upper_bound_f2": prompt.upper_bound_f2,
        "fixed_count": len(prompt.prefix.fixed_set),
        "rng_state_digest": "",
    }


def _instance_obj(inst: Instance) -> dict[str, Any]:
    return {
        "name": inst.name,
        "n": inst.n,
        "start_depot": inst.start_depot,
        "end_depot": inst.end_depot,
        "customers": [
            {
                "id": c.id,
                "x": c.x,
                "y": c.y,
                "kind": c.kind.value,
                "request_time": c.request_time,
            }
            for c in inst.customers
        ],
    }


def _config_obj(cfg: RunConfig) -> dict[str, Any]:
    return {
        "n_vehicles": cfg.n_vehicles,
        "n_eras": cfg.n_eras,
        "delta": cfg.delta,
        "seed": cfg.seed,
        "honor_release": cfg.honor_release,
        "evo": {
            "mu": cfg.evo.mu,
            "p_swap": cfg.evo.p_swap,
            "n_swap": cfg.evo.n_swap,
            "evals_per_era": cfg.evo.evals_per_era,
        },
    }


def _config_from_obj(obj: dict[str, Any]) -> RunConfig:
    evo = obj.get("evo", {})
    return RunConfig(
        n_vehicles=obj["n_vehicles"],
        n_eras=obj["n_eras"],
        delta=obj["delta"],
        dm_policy=Interactive(),
        evo=EvoParams(
            mu=evo.get("mu", 100),
            p_swap=evo.get("p_swap", 0.6),
            n_swap=evo.get("n_swap", 10),
            evals_per_era=evo.get("evals_per_era", 65_000),
        ),
        seed=obj["seed"],
        honor_release=obj.get("honor_release", False),
    )


def _prompt_obj(prompt: DecisionPrompt) -> dict[str, Any]:
    members = []
    for i in range(1, prompt.mu + 1):
        plan = prompt.plan_of(i)
        f1, f2 = prompt.front.objectives[i - 1]
        members.append(
            {
                "index": i,
                "f1": f1,
                "f2": f2,
                "dominated": not prompt.front.nd_mask[i - 1],
                "tours": [list(tour) for tour in plan.tours],
            }
        )
    return {
        "era": prompt.era_index,
        "t": prompt.t,
        "upper_bound_f2": prompt.upper_bound_f2,
        "mu": prompt.mu,
        "members": members,
        "realized_prefixes": [list(p) for p in prompt.prefix.prefixes],
        "prefix_irreversible": True,
        "strategy_ghosts": {str(d): auto_pick(d, prompt.mu) for d in GHOST_STRATEGIES},
    }


# -- HTTP layer ------------------------------------------------------------------

from pydantic import BaseModel


class CreateRequest(BaseModel):
    instance_file: str
    n_vehicles: int = 1
    n_eras: int = 7
    delta: float | str = "auto"
    seed: int = 0
    mu: int = 100
    evals_per_era: int = 65_000
    p_swap: float = 0.6
    n_swap: int = 10
    honor_release: bool = False


class DecideRequest(BaseModel):
    index: int


def create_app(manager: SessionManager, instance_dir: str | Path | None = None):
    """FastAPI application exposing the session protocol."""
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="dynvrp decision service", version=str(PROTOCOL_VERSION))
    instances_root = Path(instance_dir) if instance_dir else Path.cwd()

    @app.get("/health")
    def health():
        return {"status": "ok", "protocol_version": PROTOCOL_VERSION}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": manager.list_ids()}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateRequest):
        path = instances_root / req.instance_file
        if not path.exists():
            raise HTTPException(404, f"instance file {req.instance_file} not found")
        cfg = RunConfig(
            n_vehicles=req.n_vehicles,
            n_eras=req.n_eras,
            delta=req.delta,
            dm_policy=Interactive(),
            evo=EvoParams(
                mu=req.mu,
                p_swap=req.p_swap,
                n_swap=req.n_swap,
                evals_per_era=req.evals_per_era,
            ),
            seed=req.seed,
        )
        session = manager.create(load_instance(path), cfg)
        return {"session_id": session.id}

    @app.post("/sessions/{session_id}/resume")
    def resume_session(session_id: str):
        try:
            session = manager.resume(session_id)
        except SessionNotFound:
            raise HTTPException(404, f"no snapshot for session {session_id}") from None
        except ConfigurationError as e:
            raise HTTPException(409, str(e)) from None
        return {"session_id": session.id}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        try:
            return manager.get_state(session_id)
        except SessionNotFound:
            raise HTTPException(404, f"unknown session {session_id}") from None

    @app.post("/sessions/{session_id}/decision")
    def decide(session_id: str, req: DecideRequest):
        try:
            return manager.decide(session_id, req.index)
        except SessionNotFound:
            raise HTTPException(404, f"unknown session {session_id}") from None
        except SessionConflict as e:
            raise HTTPException(409, str(e)) from None
        except ValueError as e:
            raise HTTPException(422, str(e)) from None

    @app.post("/sessions/{session_id}/abort")
    def abort(session_id: str):
        try:
            manager.abort(session_id)
        except SessionNotFound:
            raise HTTPException(404, f"unknown session {session_id}") from None
        return {"session_id": session_id, "status": "aborted"}

    return app
