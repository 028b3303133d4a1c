"""Prompt assembly, model adapters, and the evaluation run matrix.

Every model in a run receives byte-identical system and user prompts built
from the same template; only opaque model parameters differ. Each (document,
model) cell is called exactly once. Transport-level failures are retried a
bounded number of times and then recorded as a failed cell that downstream
scoring treats as all-absent; a well-formed model response is never retried.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

import httpx

from ._jsonl import read_jsonl, write_jsonl
from .corpus import Document, TokenizerConfig, DEFAULT_TOKENIZER, count_tokens
from .schema import ExtractionRecord, FieldCatalog, FieldCategory, ParseIssue, parse_model_output

logger = logging.getLogger(__name__)


class AdapterError(RuntimeError):
    """Base class for adapter failures."""


class AdapterTransportError(AdapterError):
    """Connection-level failure or 5xx; eligible for bounded retries."""


class AdapterConfigError(AdapterError):
    """Missing credentials or bad endpoint config; aborts before any call."""


@dataclass(frozen=True)
class PromptBundle:
    doc_id: str
    system_prompt: str
    user_prompt: str
    model_params: Mapping[str, Any] = field(default_factory=dict)


def prompt_hash(bundle: PromptBundle) -> str:
    """Hash of the prompt text only, for asserting cross-model prompt parity."""
    digest = hashlib.sha256()
    digest.update(bundle.system_prompt.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(bundle.user_prompt.encode("utf-8"))
    return digest.hexdigest()


def replay_key(model_id: str, bundle: PromptBundle) -> str:
    digest = hashlib.sha256()
    digest.update(model_id.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(prompt_hash(bundle).encode("ascii"))
    return digest.hexdigest()


DEFAULT_SYSTEM_TEMPLATE = """\
You are a careful contract analyst. Extract the requested fields from the
contract supplied in the user message.

Respond with a single JSON object containing exactly one key per field
identifier listed below, and no other keys. Each value must be an object of
the form {"answer": <string or null>, "spans": [<string>, ...]}, where
"answer" is the display answer and "spans" is a list of verbatim excerpts
copied character-for-character from the contract that support the answer.
Never paraphrase span text. Do not reformat dates, amounts, or casing. If the
contract does not contain a field, use {"answer": null, "spans": []}.

Fields to extract:
{{field_requests}}"""

DEFAULT_USER_TEMPLATE = """\
Extract all listed fields from the following contract.

--- CONTRACT START ---
{{document}}
--- CONTRACT END ---"""

_CATEGORY_GUIDANCE = {
    FieldCategory.EXTRACTED_TEXT: "quote the clause text covering this concept in spans; answer may be null",
    FieldCategory.DURATION: "duration; copy the value exactly as written into answer and quote supporting text",
    FieldCategory.DATE: "date; copy the value exactly as written, without reformatting",
    FieldCategory.CURRENCY: "amount; copy the value exactly as written, including symbols and separators",
    FieldCategory.SHORT_TEXT: "short identifying text; copy it exactly as stated in the contract",
}


@dataclass(frozen=True)
class PromptTemplate:
    system_template: str = DEFAULT_SYSTEM_TEMPLATE
    user_template: str = DEFAULT_USER_TEMPLATE

    def __post_init__(self) -> None:
        if "{{field_requests}}" not in self.system_template:
            raise ValueError("system template is missing the {{field_requests}} placeholder")
        if "{{document}}" not in self.user_template:
            raise ValueError("user template is missing the {{document}} placeholder")


def field_request_lines(catalog: FieldCatalog) -> str:
    lines = []
    for spec in catalog.fields:
        if spec.category is FieldCategory.CLOSED_SET:
            options = ", ".join(spec.option_list or ())
            guidance = f"answer must be exactly one of: {options}"
        else:
            guidance = _CATEGORY_GUIDANCE[spec.category]
        lines.append(f'- "{spec.field_id}" ({spec.display_name}): {guidance}')
    return "\n".join(lines)


def build_prompt(
    doc: Document,
    catalog: FieldCatalog,
    template: PromptTemplate | None = None,
    *,
    model_params: Mapping[str, Any] | None = None,
) -> PromptBundle:
    """Deterministic prompt bundle; the full document text goes in unchunked."""
    if not doc.text:
        raise ValueError("document text is empty")
    template = template or PromptTemplate()
    system = template.system_template.replace("{{field_requests}}", field_request_lines(catalog))
    user = template.user_template.replace("{{document}}", doc.text)
    return PromptBundle(
        doc_id=doc.doc_id,
        system_prompt=system,
        user_prompt=user,
        model_params=dict(model_params or {}),
    )


@dataclass(frozen=True)
class UsageRecord:
    prompt_tokens: int
    completion_tokens: int
    latency_s: float
    started_at: float
    finished_at: float
    estimated: bool = False


@dataclass
class RunRecord:
    doc_id: str
    model_id: str
    raw_response: str
    usage: UsageRecord
    attempt: int = 1
    error: str | None = None


@dataclass(frozen=True)
class AdapterReply:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_s: float | None = None


class ModelAdapter(Protocol):
    model_id: str

    def complete(self, bundle: PromptBundle) -> AdapterReply: ...


class HttpChatAdapter:
    """Adapter for chat-completion style HTTP endpoints.

    Credentials come only from the environment; URLs and params from config.
    """

    def __init__(
        self,
        model_id: str,
        base_url: str,
        *,
        model_name: str | None = None,
        api_key_env: str | None = None,
        params: Mapping[str, Any] | None = None,
        timeout_s: float = 600.0,
    ) -> None:
        self.model_id = model_id
        self.model_name = model_name or model_id
        self.base_url = base_url.rstrip("/")
        self.params = dict(params or {})
        self.timeout_s = timeout_s
        self._api_key = None
        if api_key_env:
            self._api_key = os.environ.get(api_key_env)
            if not self._api_key:
                raise AdapterConfigError(f"environment variable {api_key_env} is not set")

    def complete(self, bundle: PromptBundle) -> AdapterReply:
        payload: dict[str, Any] = {
            "model": self.model_name,
            "messages": [
                {"role": "system", "content": bundle.system_prompt},
                {"role": "user", "content": bundle.user_prompt},
            ],
        }
        payload.update(self.params)
        payload.update(bundle.model_params)
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout_s,
            )
        except httpx.HTTPError as exc:
            raise AdapterTransportError(f"{self.model_id}: {exc}") from exc
        if response.status_code >= 500:
            raise AdapterTransportError(f"{self.model_id}: server returned {response.status_code}")
        if response.status_code in (401, 403):
            raise AdapterConfigError(f"{self.model_id}: authentication failed ({response.status_code})")
        if response.status_code >= 400:
            raise AdapterError(f"{self.model_id}: request failed ({response.status_code})")
        data = response.json()
        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise AdapterError(f"{self.model_id}: malformed completion payload") from exc
        usage = data.get("usage") or {}
        return AdapterReply(
            text=text,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )


class ReplayAdapter:
    """Deterministic adapter backed by recorded fixtures keyed by prompt hash."""

    def __init__(self, model_id: str, fixture_dir: str | Path) -> None:
        self.model_id = model_id
        self.fixture_dir = Path(fixture_dir)

    def _path(self, bundle: PromptBundle) -> Path:
        return self.fixture_dir / f"{replay_key(self.model_id, bundle)}.json"

    def store(
        self,
        bundle: PromptBundle,
        text: str,
        *,
        prompt_tokens: int | None = None,
        completion_tokens: int | None = None,
        latency_s: float | None = None,
    ) -> Path:
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        path = self._path(bundle)
        path.write_text(
            json.dumps(
                {
                    "response": text,
                    "usage": {
                        "prompt_tokens": prompt_tokens,
                        "completion_tokens": completion_tokens,
                    },
                    "latency_s": latency_s,
                },
                ensure_ascii=False,
            ),
            encoding="utf-8",
        )
        return path

    def complete(self, bundle: PromptBundle) -> AdapterReply:
        path = self._path(bundle)
        if not path.exists():
            raise AdapterTransportError(f"{self.model_id}: no recorded fixture at {path.name}")
        data = json.loads(path.read_text(encoding="utf-8"))
        usage = data.get("usage") or {}
        return AdapterReply(
            text=data.get("response", ""),
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
            latency_s=data.get("latency_s"),
        )


class StaticAdapter:
    """Returns one fixed response for every bundle; handy for stubs and demos."""

    def __init__(
        self,
        model_id: str,
        text: str,
        *,
        prompt_tokens: int | None = None,
        completion_tokens: int | None = None,
        latency_s: float | None = None,
    ) -> None:
        self.model_id = model_id
        self.text = text
        self.prompt_tokens = prompt_tokens
        self.completion_tokens = completion_tokens
        self.latency_s = latency_s

    def complete(self, bundle: PromptBundle) -> AdapterReply:
        return AdapterReply(
            text=self.text,
            prompt_tokens=self.prompt_tokens,
            completion_tokens=self.completion_tokens,
            latency_s=self.latency_s,
        )


class FnAdapter:
    """Wraps a plain function (bundle -> response text); for tests."""

    def __init__(
        self,
        model_id: str,
        fn: Callable[[PromptBundle], str],
        *,
        latency_s: float | None = None,
    ) -> None:
        self.model_id = model_id
        self.fn = fn
        self.latency_s = latency_s

    def complete(self, bundle: PromptBundle) -> AdapterReply:
        return AdapterReply(text=self.fn(bundle), latency_s=self.latency_s)


def invoke(
    adapter: ModelAdapter,
    bundle: PromptBundle,
    *,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
    max_transport_retries: int = 2,
) -> RunRecord:
    """One call per cell. Transport errors are retried up to the bound, then
    recorded as a failed cell; model responses are never re-requested."""
    started = time.time()
    clock_start = time.perf_counter()
    reply: AdapterReply | None = None
    error: str | None = None
    attempt = 0
    while attempt <= max_transport_retries:
        attempt += 1
        try:
            reply = adapter.complete(bundle)
            break
        except AdapterTransportError as exc:
            error = str(exc)
            logger.warning("transport failure (attempt %d) for %s/%s: %s",
                           attempt, adapter.model_id, bundle.doc_id, exc)
    elapsed = time.perf_counter() - clock_start
    finished = time.time()

    text = reply.text if reply is not None else ""
    latency = reply.latency_s if reply is not None and reply.latency_s is not None else elapsed
    estimated = False
    prompt_tokens = reply.prompt_tokens if reply is not None else None
    completion_tokens = reply.completion_tokens if reply is not None else None
    if prompt_tokens is None:
        prompt_tokens = count_tokens(bundle.system_prompt, tokenizer) + count_tokens(
            bundle.user_prompt, tokenizer
        )
        estimated = True
    if completion_tokens is None:
        completion_tokens = count_tokens(text, tokenizer)
        estimated = True
    return RunRecord(
        doc_id=bundle.doc_id,
        model_id=adapter.model_id,
        raw_response=text,
        usage=UsageRecord(
            prompt_tokens=int(prompt_tokens),
            completion_tokens=int(completion_tokens),
            latency_s=float(latency),
            started_at=started,
            finished_at=finished,
            estimated=estimated,
        ),
        attempt=attempt,
        error=None if reply is not None else error,
    )


def _guarded_invoke(adapter: ModelAdapter, bundle: PromptBundle, tokenizer: TokenizerConfig) -> RunRecord:
    try:
        return invoke(adapter, bundle, tokenizer=tokenizer)
    except Exception as exc:  # one bad cell must not abort the batch
        logger.exception("cell %s/%s failed", adapter.model_id, bundle.doc_id)
        now = time.time()
        return RunRecord(
            doc_id=bundle.doc_id,
            model_id=adapter.model_id,
            raw_response="",
            usage=UsageRecord(0, 0, 0.0, now, now, estimated=True),
            attempt=1,
            error=str(exc),
        )


@dataclass
class MatrixResult:
    records: list[RunRecord]
    batch_wall_clock_s: dict[str, float]


def run_matrix(
    docs: Sequence[Document],
    adapters: Sequence[ModelAdapter],
    catalog: FieldCatalog,
    *,
    concurrency_limit: int = 4,
    template: PromptTemplate | None = None,
    model_params: Mapping[str, Mapping[str, Any]] | None = None,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> MatrixResult:
    """Run every (document, model) cell once and time each model's batch.

    Prompts are built once per document and shared across models, so prompt
    parity holds by construction. Cells for one model run concurrently up to
    concurrency_limit; models run one after another so each batch wall clock
    is meaningful.
    """
    if not docs or not adapters:
        raise ValueError("run_matrix needs at least one document and one adapter")
    model_params = model_params or {}
    bundles = {
        doc.doc_id: build_prompt(doc, catalog, template)
        for doc in docs
    }
    records: list[RunRecord] = []
    wall_clock: dict[str, float] = {}
    for adapter in adapters:
        params = model_params.get(adapter.model_id)
        batch = [
            bundles[doc.doc_id] if not params
            else PromptBundle(doc.doc_id, bundles[doc.doc_id].system_prompt,
                              bundles[doc.doc_id].user_prompt, dict(params))
            for doc in docs
        ]
        start = time.perf_counter()
        with ThreadPoolExecutor(max_workers=max(1, concurrency_limit)) as pool:
            futures = [pool.submit(_guarded_invoke, adapter, bundle, tokenizer) for bundle in batch]
            records.extend(future.result() for future in futures)
        wall_clock[adapter.model_id] = time.perf_counter() - start
    return MatrixResult(records=records, batch_wall_clock_s=wall_clock)


def parse_records(
    records: Sequence[RunRecord],
    catalog: FieldCatalog,
) -> tuple[list[ExtractionRecord], dict[tuple[str, str], list[ParseIssue]]]:
    """Parse raw run responses into extraction records, keeping issues per cell."""
    parsed: list[ExtractionRecord] = []
    issues: dict[tuple[str, str], list[ParseIssue]] = {}
    for record in records:
        extraction, cell_issues = parse_model_output(
            record.raw_response, catalog, doc_id=record.doc_id, model_id=record.model_id
        )
        parsed.append(extraction)
        if cell_issues:
            issues[(record.doc_id, record.model_id)] = cell_issues
    return parsed, issues


def run_record_to_dict(record: RunRecord) -> dict[str, Any]:
    return {
        "doc_id": record.doc_id,
        "model_id": record.model_id,
        "raw_response": record.raw_response,
        "attempt": record.attempt,
        "error": record.error,
        "usage": {
            "prompt_tokens": record.usage.prompt_tokens,
            "completion_tokens": record.usage.completion_tokens,
            "latency_s": record.usage.latency_s,
            "started_at": record.usage.started_at,
            "finished_at": record.usage.finished_at,
            "estimated": record.usage.estimated,
        },
    }


def run_record_from_dict(data: Mapping[str, Any]) -> RunRecord:
    usage = data["usage"]
    return RunRecord(
        doc_id=data["doc_id"],
        model_id=data["model_id"],
        raw_response=data.get("raw_response", ""),
        usage=UsageRecord(
            prompt_tokens=int(usage["prompt_tokens"]),
            completion_tokens=int(usage["completion_tokens"]),
            latency_s=float(usage["latency_s"]),
            started_at=float(usage.get("started_at", 0.0)),
            finished_at=float(usage.get("finished_at", 0.0)),
            estimated=bool(usage.get("estimated", False)),
        ),
        attempt=int(data.get("attempt", 1)),
        error=data.get("error"),
    )


def write_run_records(records: Iterable[RunRecord], path: str | Path) -> None:
    write_jsonl((run_record_to_dict(r) for r in records), path)


def read_run_records(path: str | Path) -> list[RunRecord]:
    return [run_record_from_dict(d) for d in read_jsonl(path)]


def adapter_from_config(config: Mapping[str, Any]) -> ModelAdapter:
    kind = config.get("adapter")
    model_id = config.get("model_id", "")
    if not model_id:
        raise AdapterConfigError("adapter config needs a model_id")
    if kind == "http":
        return HttpChatAdapter(
            model_id,
            config["base_url"],
            model_name=config.get("model_name"),
            api_key_env=config.get("api_key_env"),
            params=config.get("params"),
            timeout_s=float(config.get("timeout_s", 600.0)),
        )
    if kind == "replay":
        return ReplayAdapter(model_id, config["fixture_dir"])
    if kind == "static":
        text = config.get("response")
        if text is None and "response_file" in config:
            text = Path(config["response_file"]).read_text(encoding="utf-8")
        return StaticAdapter(
            model_id,
            text or "",
            prompt_tokens=config.get("prompt_tokens"),
            completion_tokens=config.get("completion_tokens"),
            latency_s=config.get("latency_s"),
        )
    raise AdapterConfigError(f"unknown adapter kind {kind!r}")


@dataclass
class RunConfig:
    adapters: list[ModelAdapter]
    concurrency_limit: int = 4
    template: PromptTemplate | None = None
    model_params: dict[str, dict[str, Any]] = field(default_factory=dict)


def load_run_config(path: str | Path) -> RunConfig:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    base = Path(path).parent
    adapters = []
    params: dict[str, dict[str, Any]] = {}
    for entry in data.get("models", []):
        entry = dict(entry)
        if entry.get("adapter") == "replay" and not Path(entry.get("fixture_dir", "")).is_absolute():
            entry["fixture_dir"] = str(base / entry["fixture_dir"])
        if entry.get("adapter") == "static" and "response_file" in entry and not Path(entry["response_file"]).is_absolute():
            entry["response_file"] = str(base / entry["response_file"])
        adapters.append(adapter_from_config(entry))
        if "params" in entry and entry.get("adapter") != "http":
            params[entry["model_id"]] = dict(entry["params"])
    if not adapters:
        raise AdapterConfigError(f"{path}: run config lists no models")
    template = None
    if "template" in data:
        template = PromptTemplate(
            system_template=data["template"].get("system_template", DEFAULT_SYSTEM_TEMPLATE),
            user_template=data["template"].get("user_template", DEFAULT_USER_TEMPLATE),
        )
    return RunConfig(
        adapters=adapters,
        concurrency_limit=int(data.get("concurrency_limit", 4)),
        template=template,
        model_params=params,
    )
