"""Completion providers: the HTTP chat backend and the deterministic mock.

The orchestrator talks to a single `complete(prompt, params)` capability.
The mock resolves replies from fixture files keyed by operation and seed
name, so the whole system runs offline and reproducibly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import httpx

API_KEY_ENV = "FLEXMIND_API_KEY"


def bundled_fixtures_dir() -> Path:
    """Directory of the fixture replies shipped with the package."""
    return Path(__file__).resolve().parent / "fixtures"


@dataclass(frozen=True)
class ProviderParams:
    """Per-call knobs.

    op_name and seed_name ride along so keyed providers (the mock) can
    resolve a reply without parsing the prompt; the HTTP provider ignores
    them.
    """

    model_name: str
    temperature: float
    max_output_chars: int
    op_name: str = ""
    seed_name: str = ""


class ProviderTransportError(Exception):
    """A single completion call failed to produce a reply."""


@runtime_checkable
class ProviderPort(Protocol):
    provider_id: str

    def complete(self, rendered_prompt: str, params: ProviderParams) -> str:
        ...


def fixture_key(op_name: str, seed_name: str) -> str:
    """Canonical mock lookup key: `<opkind-lowercase>__<normalized-name>`."""
    return f"{op_name.lower()}__{seed_name}"


class HttpChatProvider:
    """OpenAI-compatible chat-completion client.

    The API key comes from the FLEXMIND_API_KEY environment variable unless
    passed explicitly; it is never logged or echoed in errors.
    """

    provider_id = "http"

    def __init__(
        self,
        base_url: str,
        *,
        api_key: str | None = None,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            timeout=timeout,
            transport=transport,
        )

    def complete(self, rendered_prompt: str, params: ProviderParams) -> str:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": rendered_prompt}],
            "temperature": params.temperature,
            "max_tokens": max(64, params.max_output_chars // 4),
        }
        try:
            response = self._client.post("/chat/completions", json=body, headers=headers)
            response.raise_for_status()
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise ProviderTransportError(f"chat completion request failed: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderTransportError(f"malformed provider response: {exc}") from exc
        if not isinstance(content, str):
            raise ProviderTransportError("provider returned non-text content")
        return content

    def close(self) -> None:
        self._client.close()


class MockProvider:
    """Deterministic provider backed by fixture files.

    Lookup: `<fixtures_dir>/<opkind-lowercase>__<normalized seed name>.txt`,
    file content returned byte-for-byte. With placeholder_mode on, unseeded
    keys get a hash-derived, schema-valid reply instead of an error, which
    keeps randomized exercises fully offline.
    """

    provider_id = "mock"

    def __init__(self, fixtures_dir: str | Path, *, placeholder_mode: bool = False):
        self.fixtures_dir = Path(fixtures_dir)
        self.placeholder_mode = placeholder_mode

    def complete(self, rendered_prompt: str, params: ProviderParams) -> str:
        key = fixture_key(params.op_name, params.seed_name)
        path = self.fixtures_dir / f"{key}.txt"
        if path.is_file():
            return path.read_text(encoding="utf-8")
        if self.placeholder_mode:
            return placeholder_reply(params.op_name, params.seed_name)
        raise ProviderTransportError(f"no mock fixture for key {key!r}")


def _digest(op_name: str, seed_name: str) -> str:
    raw = f"{op_name.lower()}|{seed_name}".encode("utf-8")
    return hashlib.blake2b(raw, digest_size=8).hexdigest()


def placeholder_reply(op_name: str, seed_name: str) -> str:
    """Schema-valid reply derived purely from the lookup key.

    Bit-deterministic: identical (op, seed) pairs always produce identical
    text.
    """
    h = _digest(op_name, seed_name)
    seed = seed_name[:60] if seed_name else "blank seed"
    op = op_name.lower()

    def idea(tag: str) -> dict:
        return {
            "name": f"{seed} option {tag}",
            "description": f"Placeholder idea {tag} ({h}) exploring {seed}.",
        }

    if op in ("initializespace", "expandcategory"):
        count = 1 if op == "expandcategory" else 4
        categories = []
        for i in range(count):
            # ExpandCategory replies must name the seed category exactly.
            name = seed_name if op == "expandcategory" else f"{seed} direction {h}-{i}"
            categories.append(
                {
                    "name": name,
                    "description": f"Placeholder category {i} ({h}) for {seed}.",
                    "ideas": [idea(f"{h}-{i}-{j}") for j in range(3)],
                }
            )
        return json.dumps({"categories": categories})
    if op == "findsimilar":
        attributes = [
            {"name": f"{seed} facet {h}-{i}", "rationale": f"Placeholder facet {i} of {seed}."}
            for i in range(2)
        ]
        categories = [
            {
                "name": f"{seed} angle {h}-{i}",
                "description": f"Placeholder related category {i} for {seed}.",
                "from_attribute": attributes[i % 2]["name"],
                "ideas": [idea(f"{h}-s{i}-{j}") for j in range(2)],
            }
            for i in range(2)
        ]
        return json.dumps({"attributes": attributes, "categories": categories})
    if op == "diagnoserisks":
        return json.dumps(
            {
                "risks": [
                    {
                        "name": f"{seed} risk {h}-{i}",
                        "description": f"Placeholder drawback {i} of {seed}.",
                    }
                    for i in range(2)
                ]
            }
        )
    if op == "mitigaterisk":
        return json.dumps(
            {
                "mitigations": [
                    {
                        "name": f"{seed} fix {h}-{i}",
                        "description": f"Placeholder workaround {i} for {seed}.",
                    }
                    for i in range(2)
                ]
            }
        )
    if op == "answerquestion":
        return json.dumps(
            {"answer": f"Placeholder answer ({h}) grounded in the context of {seed}."}
        )
    raise ProviderTransportError(f"unknown operation {op_name!r}")
