"""Minimal client for OpenAI-style chat-completion endpoints.

One call, bounded retries with exponential backoff on transport errors and
5xx responses, bearer-token auth from an environment variable. The only
response field used is ``choices[0].message.content``.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import requests

log = logging.getLogger(__name__)


class GeneratorUnavailable(Exception):
    """The endpoint could not produce a response (after retries, if transient).

    When raised from a review loop, ``trace`` carries the attempts made before
    the failure.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class MalformedResponse(Exception):
    """HTTP 200, but the payload is not a usable chat completion."""


@dataclass(frozen=True)
class RemoteBinding:
    """Where and how to reach the generator."""

    endpoint: str
    model_name: str
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 0.5
    auth_env: str = "SECAD_API_TOKEN"

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def generate_remote(prompt: str, binding: RemoteBinding, *, transport=None) -> str:
    """POST one chat completion request and return the generated text.

    Up to ``max_retries`` retries (so ``max_retries + 1`` requests total) with
    delays ``backoff_base * 2^k``; only transport failures and 5xx responses
    are retried. Other non-200 statuses raise
    :class:`GeneratorUnavailable` immediately; a 200 whose body lacks
    ``choices[0].message.content`` raises :class:`MalformedResponse`.
    """
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(binding.auth_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": binding.model_name,
        "messages": [{"role": "user", "content": prompt}],
    }
    http = transport if transport is not None else requests
    last_problem = "no request made"
    for attempt in range(binding.max_retries + 1):
        if attempt:
            time.sleep(binding.backoff_base * 2 ** (attempt - 1))
        try:
            response = http.post(binding.endpoint, json=body, headers=headers, timeout=binding.timeout)
        except requests.RequestException as err:
            last_problem = f"transport error: {err}"
            log.debug("request %d/%d failed: %s", attempt + 1, binding.max_retries + 1, err)
            continue
        if response.status_code >= 500:
            last_problem = f"server error {response.status_code}"
            log.debug("request %d/%d got %d", attempt + 1, binding.max_retries + 1, response.status_code)
            continue
        if response.status_code != 200:
            raise GeneratorUnavailable(f"endpoint rejected the request with status {response.status_code}")
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as err:
            raise MalformedResponse(f"response is not a usable chat completion: {err}") from err
        if not isinstance(content, str):
            raise MalformedResponse("completion content is not a string")
        return content
    raise GeneratorUnavailable(
        f"no response after {binding.max_retries + 1} attempt(s); last problem: {last_problem}"
    )
