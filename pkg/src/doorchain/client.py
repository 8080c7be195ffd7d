"""Client-side gateway driver: session handshake plus signed submissions.

The client holds the card file (including the private key), performs the
challenge-response login, and signs every transaction payload's canonical
JSON bytes before posting. Used by the CLI, the benchmark harness and tests.
"""

from __future__ import annotations

import base64
import json
from typing import Iterator, Optional

import httpx

from . import chaincode
from .codec import canonical_json_bytes
from .domain import Department, HolderCard, Participant, PhysicalPlace


class ClientError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(f"{status} {code}: {message}")
        self.status = status
        self.code = code
        self.message = message


class GatewayClient:
    def __init__(
        self,
        base_url: str,
        holder: Optional[HolderCard] = None,
        http: Optional[httpx.Client] = None,
        timeout: float = 60.0,
    ):
        self.holder = holder
        self._own_http = http is None
        self.http = http or httpx.Client(base_url=base_url, timeout=timeout)
        self.token: Optional[str] = None
        self.participant_id: Optional[str] = None
        self.role: Optional[str] = None

    def close(self) -> None:
        if self._own_http:
            self.http.close()

    def __enter__(self) -> "GatewayClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- plumbing ------------------------------------------------------------

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    @staticmethod
    def _result(response: httpx.Response) -> dict:
        try:
            data = response.json()
        except json.JSONDecodeError:
            data = {}
        if response.status_code >= 400:
            raise ClientError(
                response.status_code,
                data.get("error", "http-error"),
                data.get("message", response.text[:200]),
            )
        return data

    def post(self, path: str, body: dict) -> dict:
        return self._result(self.http.post(path, json=body, headers=self._headers()))

    def get(self, path: str, params: Optional[dict] = None) -> dict:
        clean = {k: v for k, v in (params or {}).items() if v is not None}
        return self._result(self.http.get(path, params=clean, headers=self._headers()))

    # -- session -------------------------------------------------------------

    def login(self) -> dict:
        if self.holder is None:
            raise ValueError("login requires a holder card")
        opened = self.post("/api/session", {"card": self.holder.card.to_dict()})
        challenge = base64.b64decode(opened["challenge"])
        signature = base64.b64encode(self.holder.sign(challenge)).decode("ascii")
        done = self.post(
            "/api/session", {"sessionId": opened["sessionId"], "signature": signature}
        )
        self.token = done["token"]
        self.participant_id = done["participantId"]
        self.role = done["role"]
        return done

    # -- signed transactions -------------------------------------------------

    def _sign(self, payload: dict) -> str:
        assert self.holder is not None, "transactions require a holder card"
        return base64.b64encode(self.holder.sign(canonical_json_bytes(payload))).decode("ascii")

    def grant(self, target_participant_id: str, place_id: str) -> dict:
        payload = chaincode.grant_access_payload(target_participant_id, place_id)
        return self.post(
            "/api/tx/grant",
            {
                "targetParticipantId": target_participant_id,
                "placeId": place_id,
                "signature": self._sign(payload),
            },
        )

    def revoke(self, target_participant_id: str, place_id: str) -> dict:
        payload = chaincode.revoke_access_payload(target_participant_id, place_id)
        return self.post(
            "/api/tx/revoke",
            {
                "targetParticipantId": target_participant_id,
                "placeId": place_id,
                "signature": self._sign(payload),
            },
        )

    def delegate(self, delegate_participant_id: str, department_id: str) -> dict:
        payload = chaincode.delegate_authority_payload(delegate_participant_id, department_id)
        return self.post(
            "/api/tx/delegate",
            {
                "delegateParticipantId": delegate_participant_id,
                "departmentId": department_id,
                "signature": self._sign(payload),
            },
        )

    def revoke_delegation(self, delegate_participant_id: str, department_id: str) -> dict:
        payload = chaincode.revoke_delegation_payload(delegate_participant_id, department_id)
        return self.post(
            "/api/tx/revoke-delegation",
            {
                "delegateParticipantId": delegate_participant_id,
                "departmentId": department_id,
                "signature": self._sign(payload),
            },
        )

    def register_participant(self, participant: Participant) -> dict:
        payload = chaincode.register_participant_payload(participant)
        return self.post(
            "/api/tx/register/participant",
            {"participant": participant.to_dict(), "signature": self._sign(payload)},
        )

    def register_place(self, place: PhysicalPlace) -> dict:
        payload = chaincode.register_place_payload(place)
        return self.post(
            "/api/tx/register/place",
            {"place": place.to_dict(), "signature": self._sign(payload)},
        )

    def register_department(self, department: Department) -> dict:
        payload = chaincode.register_department_payload(department)
        return self.post(
            "/api/tx/register/department",
            {"department": department.to_dict(), "signature": self._sign(payload)},
        )

    def revoke_card(self, card_id: str) -> dict:
        payload = chaincode.revoke_card_payload(card_id)
        return self.post(
            "/api/tx/revoke-card", {"cardId": card_id, "signature": self._sign(payload)}
        )

    def check_access(self, place_id: str) -> dict:
        payload = chaincode.check_access_payload(place_id)
        return self.post(
            "/api/access/check", {"placeId": place_id, "signature": self._sign(payload)}
        )

    # -- reads ---------------------------------------------------------------

    def historian(
        self,
        participant: Optional[str] = None,
        tx_type: Optional[str] = None,
        from_time: Optional[str] = None,
        to_time: Optional[str] = None,
        limit: Optional[int] = None,
    ) -> list[dict]:
        params = {
            "participant": participant,
            "type": tx_type,
            "from": from_time,
            "to": to_time,
            "limit": limit,
        }
        return self.get("/api/historian", params)["records"]

    def places(self) -> list[dict]:
        return self.get("/api/state/places")["places"]

    def participants(self) -> list[dict]:
        return self.get("/api/state/participants")["participants"]

    def departments(self) -> list[dict]:
        return self.get("/api/state/departments")["departments"]

    def grants(self, participant: Optional[str] = None) -> list[dict]:
        return self.get("/api/state/grants", {"participant": participant})["grants"]

    def delegations(self) -> list[dict]:
        return self.get("/api/state/delegations")["delegations"]

    def network_info(self) -> dict:
        return self.get("/api/network")

    def block(self, height: int) -> dict:
        return self.get(f"/api/blocks/{height}")

    def verify_chain(self) -> dict:
        return self.get("/api/chain/verify")

    def stream_events(
        self,
        kinds: Optional[str] = None,
        place: Optional[str] = None,
        after: Optional[str] = None,
    ) -> Iterator[dict]:
        """Yield parsed SSE events; blocks until the server closes the stream."""
        params = {k: v for k, v in {"kinds": kinds, "place": place, "after": after}.items() if v}
        with self.http.stream(
            "GET", "/api/events/stream", params=params, headers=self._headers(), timeout=None
        ) as response:
            if response.status_code >= 400:
                response.read()
                raise ClientError(response.status_code, "stream-error", response.text[:200])
            buffer: list[str] = []
            for line in response.iter_lines():
                if line == "":
                    data = [l[5:].strip() for l in buffer if l.startswith("data:")]
                    buffer = []
                    if data:
                        yield json.loads("".join(data))
                else:
                    buffer.append(line)
