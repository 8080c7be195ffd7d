"""HTTP gateway: the JSON API used by door readers, admins and the console.

Authentication is card-based challenge-response: the client proves possession
of a card's private key by signing a server nonce, then carries a bearer token.
Every mutating request also carries the holder's signature over the canonical
JSON bytes of the transaction payload; peers verify that signature during
endorsement, so the gateway never needs the private key and cannot forge
transactions. Mutations respond only after the transaction commits.
"""

from __future__ import annotations

import base64
import contextlib
import json
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Optional

import httpx
import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import Response, StreamingResponse

from . import chaincode
from .acl import rules_to_json
from .chaincode import EventKind, TxType
from .codec import micros_to_rfc3339, now_micros, rfc3339_to_micros
from .config import GatewaySection
from .crypto import VerifyKey
from .domain import Department, IdentityCard, Participant, PhysicalPlace, Role, verify_card
from .events import EventFilter, parse_event_id
from .genesis import GenesisDoc
from .ledger import BadHeight, Validity, verify_chain
from .network import (
    AccessNetwork,
    EndorseRejected,
    Proposal,
    assemble,
)
from .state import Version

CHALLENGE_TTL_S = 120

_CODE_STATUS = {
    "unauthorized": 403,
    "not-found": 404,
    "already-exists": 409,
    "invalid-argument": 422,
    "unknown-transaction": 422,
    "revoked-card": 401,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class Session:
    token: str
    card: IdentityCard
    expires_at: float


@dataclass
class _PendingChallenge:
    card: IdentityCard
    challenge: bytes
    expires_at: float


class GatewayCore:
    """Everything the HTTP layer delegates to; framework-free and testable."""

    def __init__(
        self,
        network: AccessNetwork,
        authority_public: VerifyKey,
        config: GatewaySection,
        genesis_doc: GenesisDoc,
    ):
        self.network = network
        self.authority_public = authority_public
        self.config = config
        self.genesis_doc = genesis_doc
        self.ledger = network.exposed_peer.ledger
        self.bus = network.exposed_peer.event_bus
        self._sessions: dict[str, Session] = {}
        self._pending: dict[str, _PendingChallenge] = {}
        self._auth_lock = threading.Lock()
        self._webhook_stop = threading.Event()
        self._webhook_thread: Optional[threading.Thread] = None

    # -- session lifecycle ---------------------------------------------------

    def begin_session(self, card_dict: dict) -> dict:
        try:
            card = IdentityCard.from_dict(card_dict)
        except (KeyError, ValueError, TypeError) as exc:
            raise ApiError(422, "malformed-card", f"card does not parse: {exc}") from None
        if not verify_card(card, self.authority_public):
            raise ApiError(401, "bad-card", "card certificate does not verify")
        self._require_active_card(card)
        challenge = secrets.token_bytes(32)
        session_id = secrets.token_hex(16)
        with self._auth_lock:
            self._expire_locked()
            self._pending[session_id] = _PendingChallenge(
                card, challenge, time.monotonic() + CHALLENGE_TTL_S
            )
        return {
            "sessionId": session_id,
            "challenge": base64.b64encode(challenge).decode("ascii"),
        }

    def complete_session(self, session_id: str, signature_b64: str) -> dict:
        signature = _b64(signature_b64, "signature")
        with self._auth_lock:
            self._expire_locked()
            pending = self._pending.pop(session_id, None)
        if pending is None:
            raise ApiError(401, "unknown-session", "challenge not found or expired")
        if not pending.card.verify_key().verify(pending.challenge, signature):
            raise ApiError(401, "bad-signature", "challenge signature does not verify")
        participant = self._require_active_card(pending.card)
        token = secrets.token_hex(16)
        expires = time.monotonic() + self.config.session_ttl_s
        with self._auth_lock:
            self._sessions[token] = Session(token, pending.card, expires)
        return {
            "token": token,
            "participantId": participant.participant_id,
            "role": participant.role.value,
            "expiresInSeconds": self.config.session_ttl_s,
        }

    def authenticate(self, token: Optional[str]) -> tuple[Session, Participant]:
        """Resolve a bearer token; role and revocation re-checked every call."""
        if not token:
            raise ApiError(401, "unauthenticated", "missing bearer token")
        with self._auth_lock:
            self._expire_locked()
            session = self._sessions.get(token)
        if session is None:
            raise ApiError(401, "unauthenticated", "unknown or expired token")
        participant = self._require_active_card(session.card)
        return session, participant

    def _expire_locked(self) -> None:
        now = time.monotonic()
        for sid in [s for s, p in self._pending.items() if p.expires_at < now]:
            del self._pending[sid]
        for tok in [t for t, s in self._sessions.items() if s.expires_at < now]:
            del self._sessions[tok]

    def _require_active_card(self, card: IdentityCard) -> Participant:
        state = self.ledger.state
        if state.get(chaincode.revoked_card_key(card.card_id)) is not None:
            raise ApiError(401, "revoked-card", f"card {card.card_id} is revoked")
        entry = state.get(chaincode.participant_key(card.participant_id))
        if entry is None:
            raise ApiError(401, "unknown-participant", f"participant {card.participant_id} not registered")
        return Participant.from_dict(json.loads(entry[0]))

    # -- transaction path ----------------------------------------------------

    def submit_signed(self, session: Session, payload: dict, signature: bytes) -> dict:
        """Endorse, order and wait for commit; retries MVCC invalidations."""
        attempts = self.config.mvcc_retries + 1
        for attempt in range(attempts):
            proposal = Proposal(
                card=session.card,
                payload=payload,
                client_signature=signature,
                proposed_at_micros=now_micros(),
                nonce=secrets.token_bytes(16),
            )
            try:
                endorsements = self.network.endorse_all(proposal)
            except EndorseRejected as exc:
                raise ApiError(401, exc.code, exc.message) from None
            response = endorsements[0].response
            if response.get("status") != "ok":
                code = response.get("code", "invalid-argument")
                raise ApiError(
                    _CODE_STATUS.get(code, 422), code, response.get("message", "execution failed")
                )
            envelope = assemble(proposal, endorsements, self.network.policy)
            self.network.orderer.submit(envelope)
            result = self.network.commits.wait_for(envelope.tx_id, self.config.commit_timeout_s)
            if result is None:
                raise ApiError(503, "commit-timeout", "transaction did not commit in time")
            if result.validity == Validity.VALID:
                return {
                    "txId": envelope.tx_id.hex(),
                    "valid": True,
                    "blockHeight": result.height,
                    "txOffset": result.offset,
                    "response": result.response,
                }
            if result.validity != Validity.INVALID_MVCC:
                raise ApiError(400, "invalid-endorsement", "endorsement validation failed at commit")
            # MVCC conflict: re-endorse against fresh state and try again.
        raise ApiError(
            409,
            "mvcc-conflict",
            f"transaction invalidated by concurrent writes after {attempts} attempts",
        )

    # -- queries -------------------------------------------------------------

    def historian(
        self,
        viewer: Participant,
        participant: Optional[str],
        tx_type: Optional[str],
        from_micros: Optional[int],
        to_micros: Optional[int],
        limit: Optional[int],
    ) -> list[dict]:
        if viewer.role not in (Role.ADMIN, Role.CEO):
            participant = viewer.participant_id  # others see only their own
        records = self.ledger.get_historian(participant, tx_type, from_micros, to_micros, limit)
        return [rec.to_dict() for rec in records]

    def _scan_json(self, prefix: str) -> list[tuple[str, dict, Version]]:
        out = []
        for key, value, version in self.ledger.state.items():
            if key.startswith(prefix):
                out.append((key[len(prefix):], json.loads(value), version))
        return out

    def list_places(self) -> list[dict]:
        return [doc for _, doc, _ in self._scan_json(chaincode.KEY_PLACE)]

    def list_participants(self) -> list[dict]:
        return [doc for _, doc, _ in self._scan_json(chaincode.KEY_PARTICIPANT)]

    def list_departments(self) -> list[dict]:
        return [doc for _, doc, _ in self._scan_json(chaincode.KEY_DEPT)]

    def list_grants(self, participant: Optional[str] = None) -> list[dict]:
        seq_of = self.network.chain_config.seq_of
        out = []
        for rest, doc, version in self._scan_json(chaincode.KEY_DYN):
            pid, _, place_id = rest.partition("/")
            if participant is not None and pid != participant:
                continue
            out.append(
                {
                    "participantId": pid,
                    "placeId": place_id,
                    "effect": doc["effect"],
                    "grantedBy": doc["grantedBy"],
                    "seq": seq_of(version),
                }
            )
        return out

    def list_delegations(self) -> list[dict]:
        out = []
        for rest, doc, _ in self._scan_json(chaincode.KEY_DELEG):
            pid, _, dept_id = rest.partition("/")
            out.append(
                {
                    "participantId": pid,
                    "departmentId": dept_id,
                    "delegatedBy": doc["delegatedBy"],
                }
            )
        return out

    def block_dict(self, height: int) -> dict:
        try:
            block = self.ledger.chain.block(height)
        except BadHeight:
            raise ApiError(404, "not-found", f"no block at height {height}") from None
        return {
            "height": block.header.height,
            "prevHash": block.header.prev_hash.hex(),
            "dataHash": block.header.data_hash.hex(),
            "timestamp": micros_to_rfc3339(block.header.timestamp_micros),
            "blockHash": block.header.block_hash.hex(),
            "transactions": [
                {
                    "txId": env.tx_id.hex(),
                    "type": env.tx_type,
                    "participantId": env.submitter_id,
                    "proposedAt": micros_to_rfc3339(env.proposed_at_micros),
                    "valid": flag.value,
                    "response": env.response,
                    "events": [e.to_dict() for e in env.events],
                }
                for env, flag in zip(block.transactions, block.validity)
            ],
        }

    def network_info(self) -> dict:
        return {
            "name": self.genesis_doc.network_name,
            "height": self.ledger.chain.height,
            "intrusionThreshold": self.network.chain_config.intrusion_threshold,
            "maxBlockSize": self.network.chain_config.max_block_size,
            "rules": rules_to_json(self.network.chain_config.rules),
            "peers": [
                {"id": p.peer_id, "org": p.org_id, "height": p.ledger.chain.height}
                for p in self.network.peers
            ],
        }

    # -- webhook -------------------------------------------------------------

    def start_webhook(self) -> None:
        if not self.config.webhook_url or self._webhook_thread is not None:
            return
        self._webhook_stop.clear()
        self._webhook_thread = threading.Thread(
            target=self._webhook_loop, name="intrusion-webhook", daemon=True
        )
        self._webhook_thread.start()

    def stop_webhook(self) -> None:
        self._webhook_stop.set()
        if self._webhook_thread is not None:
            self._webhook_thread.join(timeout=5)
            self._webhook_thread = None

    def _webhook_loop(self) -> None:
        sub = self.bus.subscribe(
            EventFilter(kinds=frozenset({EventKind.INTRUSION_ALERT})), after=self.bus.tail()
        )
        try:
            while not self._webhook_stop.is_set():
                records = self.bus.poll(sub, 16)
                if not records:
                    self.bus.wait(0.25)
                    continue
                for rec in records:
                    try:  # best effort, one POST per alert, no retries
                        httpx.post(self.config.webhook_url, json=rec.to_dict(), timeout=5.0)
                    except Exception:
                        pass
        finally:
            self.bus.unsubscribe(sub)


def _b64(value, field_name: str) -> bytes:
    if not isinstance(value, str):
        raise ApiError(422, "malformed-body", f"{field_name} must be a base64 string")
    try:
        return base64.b64decode(value, validate=True)
    except Exception:
        raise ApiError(422, "malformed-body", f"{field_name} is not valid base64") from None


def _require_str(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value:
        raise ApiError(422, "malformed-body", f"{key} must be a non-empty string")
    return value


def _json_response(data, status: int = 200) -> Response:
    return Response(
        content=json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n",
        status_code=status,
        media_type="application/json",
    )


async def _body_dict(request: Request) -> dict:
    try:
        data = await request.json()
    except Exception:
        raise ApiError(422, "malformed-body", "request body is not valid JSON") from None
    if not isinstance(data, dict):
        raise ApiError(422, "malformed-body", "request body must be a JSON object")
    return data


def _token_of(request: Request) -> Optional[str]:
    auth = request.headers.get("authorization", "")
    if auth.lower().startswith("bearer "):
        return auth[7:].strip()
    return request.query_params.get("token")  # EventSource cannot set headers


def _int_param(request: Request, name: str) -> Optional[int]:
    raw = request.query_params.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ApiError(422, "malformed-query", f"{name} must be an integer") from None


def _time_param(request: Request, name: str) -> Optional[int]:
    raw = request.query_params.get(name)
    if raw is None:
        return None
    try:
        return rfc3339_to_micros(raw)
    except ValueError:
        raise ApiError(422, "malformed-query", f"{name} must be an RFC 3339 timestamp") from None


def create_app(core: GatewayCore) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        core.network.start()
        core.start_webhook()
        try:
            yield
        finally:
            core.stop_webhook()
            core.network.stop()

    app = FastAPI(title="doorchain gateway", lifespan=lifespan, docs_url=None, redoc_url=None)
    app.state.core = core

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> Response:
        return _json_response({"error": exc.code, "message": exc.message}, exc.status)

    # -- session -------------------------------------------------------------

    @app.post("/api/session")
    async def session_endpoint(request: Request) -> Response:
        body = await _body_dict(request)
        if "card" in body:
            if not isinstance(body["card"], dict):
                raise ApiError(422, "malformed-body", "card must be a JSON object")
            return _json_response(core.begin_session(body["card"]))
        if "sessionId" in body:
            return _json_response(
                core.complete_session(_require_str(body, "sessionId"), _require_str(body, "signature"))
            )
        raise ApiError(422, "malformed-body", "expected either {card} or {sessionId, signature}")

    # -- transactions --------------------------------------------------------

    async def _run_tx(request: Request, payload_of) -> Response:
        session, _ = core.authenticate(_token_of(request))
        body = await _body_dict(request)
        signature = _b64(body.get("signature"), "signature")
        payload = payload_of(body)
        return _json_response(core.submit_signed(session, payload, signature))

    @app.post("/api/tx/grant")
    async def tx_grant(request: Request) -> Response:
        return await _run_tx(
            request,
            lambda b: chaincode.grant_access_payload(
                _require_str(b, "targetParticipantId"), _require_str(b, "placeId")
            ),
        )

    @app.post("/api/tx/revoke")
    async def tx_revoke(request: Request) -> Response:
        return await _run_tx(
            request,
            lambda b: chaincode.revoke_access_payload(
                _require_str(b, "targetParticipantId"), _require_str(b, "placeId")
            ),
        )

    @app.post("/api/tx/delegate")
    async def tx_delegate(request: Request) -> Response:
        return await _run_tx(
            request,
            lambda b: chaincode.delegate_authority_payload(
                _require_str(b, "delegateParticipantId"), _require_str(b, "departmentId")
            ),
        )

    @app.post("/api/tx/revoke-delegation")
    async def tx_revoke_delegation(request: Request) -> Response:
        return await _run_tx(
            request,
            lambda b: chaincode.revoke_delegation_payload(
                _require_str(b, "delegateParticipantId"), _require_str(b, "departmentId")
            ),
        )

    def _entity_payload(builder, parser, key):
        def build(body: dict) -> dict:
            raw = body.get(key)
            if not isinstance(raw, dict):
                raise ApiError(422, "malformed-body", f"{key} must be a JSON object")
            try:
                return builder(parser(raw))
            except (KeyError, ValueError, TypeError) as exc:
                raise ApiError(422, "malformed-body", f"invalid {key}: {exc}") from None

        return build

    @app.post("/api/tx/register/participant")
    async def tx_register_participant(request: Request) -> Response:
        return await _run_tx(
            request,
            _entity_payload(
                chaincode.register_participant_payload, Participant.from_dict, "participant"
            ),
        )

    @app.post("/api/tx/register/place")
    async def tx_register_place(request: Request) -> Response:
        return await _run_tx(
            request,
            _entity_payload(chaincode.register_place_payload, PhysicalPlace.from_dict, "place"),
        )

    @app.post("/api/tx/register/department")
    async def tx_register_department(request: Request) -> Response:
        return await _run_tx(
            request,
            _entity_payload(
                chaincode.register_department_payload, Department.from_dict, "department"
            ),
        )

    @app.post("/api/tx/revoke-card")
    async def tx_revoke_card(request: Request) -> Response:
        return await _run_tx(
            request, lambda b: chaincode.revoke_card_payload(_require_str(b, "cardId"))
        )

    @app.post("/api/access/check")
    async def access_check(request: Request) -> Response:
        session, _ = core.authenticate(_token_of(request))
        body = await _body_dict(request)
        signature = _b64(body.get("signature"), "signature")
        payload = chaincode.check_access_payload(_require_str(body, "placeId"))
        result = core.submit_signed(session, payload, signature)
        return _json_response(
            {
                "decision": result["response"].get("decision"),
                "txId": result["txId"],
                "valid": result["valid"],
                "blockHeight": result["blockHeight"],
            }
        )

    # -- reads ---------------------------------------------------------------

    @app.get("/api/historian")
    async def historian(request: Request) -> Response:
        _, viewer = core.authenticate(_token_of(request))
        records = core.historian(
            viewer,
            participant=request.query_params.get("participant"),
            tx_type=request.query_params.get("type"),
            from_micros=_time_param(request, "from"),
            to_micros=_time_param(request, "to"),
            limit=_int_param(request, "limit"),
        )
        return _json_response({"records": records})

    @app.get("/api/state/places")
    async def state_places(request: Request) -> Response:
        core.authenticate(_token_of(request))
        return _json_response({"places": core.list_places()})

    @app.get("/api/state/participants")
    async def state_participants(request: Request) -> Response:
        core.authenticate(_token_of(request))
        return _json_response({"participants": core.list_participants()})

    @app.get("/api/state/departments")
    async def state_departments(request: Request) -> Response:
        core.authenticate(_token_of(request))
        return _json_response({"departments": core.list_departments()})

    @app.get("/api/state/grants")
    async def state_grants(request: Request) -> Response:
        core.authenticate(_token_of(request))
        return _json_response(
            {"grants": core.list_grants(request.query_params.get("participant"))}
        )

    @app.get("/api/state/delegations")
    async def state_delegations(request: Request) -> Response:
        core.authenticate(_token_of(request))
        return _json_response({"delegations": core.list_delegations()})

    @app.get("/api/network")
    async def network_info(request: Request) -> Response:
        core.authenticate(_token_of(request))
        return _json_response(core.network_info())

    @app.get("/api/blocks/{height}")
    async def block_by_height(request: Request, height: int) -> Response:
        core.authenticate(_token_of(request))
        return _json_response(core.block_dict(height))

    @app.get("/api/chain/verify")
    async def chain_verify(request: Request) -> Response:
        core.authenticate(_token_of(request))
        report = verify_chain(core.ledger.chain)
        return _json_response(report.to_dict())

    # -- event stream --------------------------------------------------------

    @app.get("/api/events/stream")
    async def events_stream(request: Request) -> StreamingResponse:
        core.authenticate(_token_of(request))
        kinds_param = request.query_params.get("kinds")
        kinds = None
        if kinds_param:
            try:
                kinds = frozenset(EventKind(k) for k in kinds_param.split(",") if k)
            except ValueError:
                raise ApiError(422, "malformed-query", "unknown event kind in kinds=") from None
        flt = EventFilter(kinds=kinds, place_id=request.query_params.get("place"))
        after_raw = request.headers.get("last-event-id") or request.query_params.get("after")
        if after_raw is not None:
            after = parse_event_id(after_raw)
            if after is None:
                raise ApiError(422, "malformed-query", "after/Last-Event-ID must look like height-offset-index")
        else:
            after = core.bus.tail()  # default: live tail only

        def generate():
            sub = core.bus.subscribe(flt, after)
            last_beat = time.monotonic()
            try:
                yield ": stream open\n\n"
                while True:
                    records = core.bus.poll(sub, 100)
                    if records:
                        for rec in records:
                            data = json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":"))
                            yield f"id: {rec.event_id}\ndata: {data}\n\n"
                        last_beat = time.monotonic()
                    else:
                        if time.monotonic() - last_beat > 15:
                            yield ": keep-alive\n\n"
                            last_beat = time.monotonic()
                        core.bus.wait(0.25)
            finally:
                core.bus.unsubscribe(sub)

        return StreamingResponse(
            generate(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app


def run_server(core: GatewayCore, host: str, port: int) -> None:
    """Blocking server entry point used by the CLI."""
    uvicorn.run(create_app(core), host=host, port=port, log_level="info")


class ServerThread:
    """The gateway on a background thread; used by tests and the bench."""

    def __init__(self, core: GatewayCore, host: str = "127.0.0.1", port: int = 0):
        self._config = uvicorn.Config(
            create_app(core), host=host, port=port, log_level="warning"
        )
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.url: Optional[str] = None

    def start(self) -> "ServerThread":
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline or not self._thread.is_alive():
                raise RuntimeError("gateway server failed to start")
            time.sleep(0.01)
        sock = self._server.servers[0].sockets[0]
        host, port = sock.getsockname()[:2]
        self.url = f"http://{host}:{port}"
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)

    def __enter__(self) -> "ServerThread":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
