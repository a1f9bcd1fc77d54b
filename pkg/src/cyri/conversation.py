"""Per-email conversation threads over the analysis results.

Each email has one thread. A user query is answered by rendering the
conversation prompt from the stored initial analysis prompt, the raw
model analysis, and the prior turns of this thread only; the thread is
persisted once per successful exchange, so a crash or gateway failure
leaves it exactly as it was (never a dangling user turn).
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from .errors import ContextInvalid, NoAnalysis
from .gateway import CONVERSATION_TEMPERATURE, CompletionRequest
from .prompts import (
    ConversationPromptContext,
    ConversationTurn,
    build_conversation_prompt,
)

#: Character proxy for the model context budget; oldest turns are dropped
#: pairwise once the rendered prompt exceeds it.
DEFAULT_PROMPT_CHAR_BUDGET = 100_000

DEFAULT_REPLY_TOKENS = 1024


def _now_iso() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


@dataclass(frozen=True)
class Turn:
    role: str  # user | assistant
    text: str
    at: str  # ISO-8601 UTC

    def to_dict(self) -> dict:
        return {"role": self.role, "text": self.text, "at": self.at}

    @classmethod
    def from_dict(cls, data: dict) -> "Turn":
        return cls(data["role"], data["text"], data["at"])


@dataclass(frozen=True)
class ConversationThread:
    message_id: str
    turns: tuple[Turn, ...] = ()

    def __post_init__(self):
        for i, turn in enumerate(self.turns):
            expected = "user" if i % 2 == 0 else "assistant"
            if turn.role != expected:
                raise ValueError(
                    f"turn {i} must be {expected}, got {turn.role}"
                )
        stamps = [t.at for t in self.turns]
        if stamps != sorted(stamps):
            raise ValueError("turn timestamps must be nondecreasing")

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConversationThread":
        return cls(
            message_id=data["message_id"],
            turns=tuple(Turn.from_dict(t) for t in data.get("turns", ())),
        )


class ConversationManager:
    """Answers user queries about analyzed emails; one ask per email at a time."""

    def __init__(self, store, gateway, model_name: str,
                 prompt_char_budget: int = DEFAULT_PROMPT_CHAR_BUDGET,
                 reply_tokens: int = DEFAULT_REPLY_TOKENS):
        self._store = store
        self._gateway = gateway
        self._model_name = model_name
        self._budget = prompt_char_budget
        self._reply_tokens = reply_tokens
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _thread_lock(self, message_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(message_id, threading.Lock())

    def build_prompt(self, bundle, query: str) -> str:
        """Render the conversation prompt, eliding old turns over budget."""
        turns = list(bundle.thread.turns) if bundle.thread else []
        history = [ConversationTurn(t.role, t.text) for t in turns]
        elided = False
        while True:
            ctx = ConversationPromptContext(
                last_user_query=query,
                initial_prompt=bundle.analysis_prompt,
                analysis=bundle.analysis.raw_output,
                history=tuple(history),
                elided=elided,
            )
            prompt = build_conversation_prompt(ctx)
            if len(prompt) <= self._budget or len(history) < 2:
                return prompt
            history = history[2:]
            elided = True

    def ask(self, message_id: str, query: str) -> str:
        """Answer one query; append both turns to the thread on success."""
        if not query or not query.strip():
            raise ContextInvalid("query must be non-empty")
        with self._thread_lock(message_id):
            bundle = self._store.get(message_id)
            if bundle is None or bundle.analysis is None or not bundle.analysis_prompt:
                raise NoAnalysis(f"email {message_id!r} has no analysis yet")
            prompt = self.build_prompt(bundle, query)
            result = self._gateway.complete(CompletionRequest(
                prompt=prompt,
                max_tokens=self._reply_tokens,
                temperature=CONVERSATION_TEMPERATURE,
                model_name=self._model_name,
                request_id=str(uuid.uuid4()),
            ))
            asked_at = _now_iso()
            answered_at = max(asked_at, _now_iso())
            old_turns = bundle.thread.turns if bundle.thread else ()
            thread = ConversationThread(
                message_id=bundle.email.message_id,
                turns=old_turns + (
                    Turn("user", query, asked_at),
                    Turn("assistant", result.text, answered_at),
                ),
            )
            self._store.put(bundle.with_thread(thread))
            return result.text

    def get_thread(self, message_id: str) -> Optional[ConversationThread]:
        bundle = self._store.get(message_id)
        return bundle.thread if bundle else None
