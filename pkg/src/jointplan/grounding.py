"""Target grounding: mapping a description to a unique scene object.

A pluggable provider scores every object against the description; candidates
above a threshold are then narrowed with cheap tools (attribute filters,
distance/size comparisons) before falling back to a human question. Facts
learned along the way land in a session-local knowledge base so the same
question is never asked twice.

The default provider is a deterministic token matcher over object names and
attributes; an external model can be plugged in behind the same callable
contract without touching any caller.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .world import SemanticScene

DEFAULT_TAU = 0.5

DEFAULT_TOOL_ORDER = ("attribute_filter", "compare_distance", "compare_size",
                      "ask_human", "random_select")

_STOPWORDS = {"the", "a", "an", "to", "of", "with", "from", "go", "and",
              "get", "pick", "up", "take", "is", "that", "which", "in"}

_NEAR_WORDS = {"nearest", "closest", "nearer", "closer"}
_FAR_WORDS = {"farthest", "furthest", "faraway"}
_BIG_WORDS = {"largest", "biggest", "larger", "bigger", "big", "large"}
_SMALL_WORDS = {"smallest", "smaller", "small", "tiny"}
_COLOR_WORDS = {"black", "blue", "red", "green", "yellow", "white", "orange",
                "purple", "grey", "gray", "brown", "pink"}


class EmptyCandidateSet(ValueError):
    """No object cleared the score threshold."""


class Unresolvable(RuntimeError):
    """Tools exhausted with multiple candidates and no human available."""


class InapplicableTool(ValueError):
    """The tool cannot run on this description (e.g. no distance keyword)."""


def tokenize(text: str) -> list[str]:
    return [t for t in re.findall(r"[a-z0-9]+", text.lower()) if t not in _STOPWORDS]


@dataclass
class KnowledgeBase:
    """Append-only fact store; keyed lookup returns the most recent value."""
    facts: list = field(default_factory=list)  # (source, key, value)

    def add(self, source: str, key: str, value: str) -> None:
        self.facts.append((source, key, value))

    def lookup(self, key: str):
        for source, k, value in reversed(self.facts):
            if k == key:
                return value
        return None


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple  # (object id, score) pairs, descending score
    tau: float

    @property
    def ids(self) -> tuple:
        return tuple(oid for oid, _ in self.candidates)

    def __len__(self) -> int:
        return len(self.candidates)


class AttributeMatcher:
    """Default grounding provider: token overlap with exact-attribute vetoes.

    Score is the fraction of description tokens found among the object's
    name and attribute tokens; an explicit attribute contradiction (the
    description names a color the object does not have) zeroes the score.
    """

    def __call__(self, description: str, scene: SemanticScene, kb: KnowledgeBase) -> dict:
        desc_tokens = tokenize(description)
        known = kb.lookup(_fact_key(description))
        scores = {}
        for obj in scene.objects:
            if known is not None:
                scores[obj.id] = 1.0 if obj.id == known else 0.0
                continue
            obj_tokens = set(tokenize(obj.name)) | {obj.id.lower()}
            for k, v in obj.attributes.items():
                obj_tokens |= set(tokenize(str(v)))
                obj_tokens.add(str(k).lower())
            if not desc_tokens:
                scores[obj.id] = 0.0
                continue
            desc_colors = {t for t in desc_tokens if t in _COLOR_WORDS}
            obj_color = str(obj.attributes.get("color", "")).lower()
            if desc_colors and obj_color and obj_color not in desc_colors:
                scores[obj.id] = 0.0
                continue
            overlap = sum(1 for t in desc_tokens if t in obj_tokens)
            scores[obj.id] = overlap / len(desc_tokens)
        return scores


def _fact_key(description: str) -> str:
    return "target:" + " ".join(tokenize(description))


def score_candidates(description: str, scene: SemanticScene, kb: KnowledgeBase,
                     provider=None, tau: float = DEFAULT_TAU) -> CandidateSet:
    """Objects scoring at least tau, in descending score (ties by object id)."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau {tau} outside [0, 1]")
    if provider is None:
        provider = AttributeMatcher()
    scores = provider(description, scene, kb)
    kept = sorted(((oid, s) for oid, s in scores.items() if s >= tau),
                  key=lambda item: (-item[1], item[0]))
    if not kept:
        raise EmptyCandidateSet(f"no object matches '{description}' at tau={tau}")
    return CandidateSet(candidates=tuple(kept), tau=tau)


@dataclass(frozen=True)
class ToolAction:
    kind: str
    argument: str | None = None


def apply_tool(action: ToolAction, cset: CandidateSet, scene: SemanticScene,
               kb: KnowledgeBase, description: str = "") -> CandidateSet:
    """Run one filtering tool; the result never grows the candidate set.

    Records a fact in the knowledge base when the tool actually
    discriminated. Raises InapplicableTool when the description carries no
    handle for the tool.
    """
    tokens = set(tokenize(description))
    ids = cset.ids

    if action.kind == "attribute_filter":
        desc_colors = tokens & _COLOR_WORDS
        if not desc_colors:
            raise InapplicableTool("no attribute keyword to filter on")
        kept = [(oid, s) for oid, s in cset.candidates
                if str(scene.object_by_id(oid).attributes.get("color", "")).lower()
                in desc_colors]
    elif action.kind == "compare_distance":
        near = tokens & _NEAR_WORDS
        far = tokens & _FAR_WORDS
        if not near and not far:
            raise InapplicableTool("no distance keyword and no reference point")
        ref = scene.start
        dist = {oid: math.dist(scene.object_by_id(oid).aabb.center, ref) for oid in ids}
        pick = min(ids, key=lambda o: (dist[o], o)) if near else \
            max(ids, key=lambda o: (dist[o], o))
        kept = [(oid, s) for oid, s in cset.candidates if oid == pick]
    elif action.kind == "compare_size":
        big = tokens & _BIG_WORDS
        small = tokens & _SMALL_WORDS
        if not big and not small:
            raise InapplicableTool("no size keyword to compare on")
        area = {oid: scene.object_by_id(oid).aabb.area for oid in ids}
        pick = max(ids, key=lambda o: (area[o], o)) if big else \
            min(ids, key=lambda o: (area[o], o))
        kept = [(oid, s) for oid, s in cset.candidates if oid == pick]
    else:
        raise InapplicableTool(f"unknown tool '{action.kind}'")

    if not kept or len(kept) == len(cset.candidates):
        return cset
    kb.add("tool", f"{action.kind}:{_fact_key(description)}", kept[0][0])
    return CandidateSet(candidates=tuple(kept), tau=cset.tau)


def question_for(description: str, options) -> str:
    return f"Which object is \"{description}\"? Options: {', '.join(options)}"


@dataclass
class TargetResolver:
    """Resumable refinement loop, usable with or without a live human.

    advance() returns ("resolved", object id) or ("ask", question, options);
    feed the human's reply back via answer(). Sans-IO so the session server
    can drive it one message at a time. `rng` enables the random_select
    last resort (disabled by default); `default_pick` is the passive
    nearest-candidate fallback used by the no-query baseline.
    """
    description: str
    scene: SemanticScene
    kb: KnowledgeBase
    cset: CandidateSet
    tool_order: tuple = DEFAULT_TOOL_ORDER
    default_pick: bool = False
    rng: object = None
    queries_used: int = 0
    _tools_done: bool = False

    def advance(self):
        if len(self.cset) == 1:
            return ("resolved", self.cset.ids[0])
        known = self.kb.lookup(_fact_key(self.description))
        if known is not None and known in self.cset.ids:
            return ("resolved", known)
        for kind in self.tool_order:
            if kind in ("ask_human", "random_select"):
                continue
            try:
                self.cset = apply_tool(ToolAction(kind), self.cset, self.scene,
                                       self.kb, self.description)
            except InapplicableTool:
                continue
            if len(self.cset) == 1:
                return ("resolved", self.cset.ids[0])
        self._tools_done = True
        if "ask_human" in self.tool_order:
            return ("ask", question_for(self.description, self.cset.ids), self.cset.ids)
        return self._fallback()

    def answer(self, object_id: str):
        if object_id not in self.cset.ids:
            raise ValueError(f"answer '{object_id}' is not a candidate")
        self.kb.add("human", _fact_key(self.description), object_id)
        self.queries_used += 1
        self.cset = CandidateSet(
            candidates=tuple((o, s) for o, s in self.cset.candidates if o == object_id),
            tau=self.cset.tau)
        return ("resolved", object_id)

    def _fallback(self):
        if self.default_pick:
            # passive behavior: nearest top-scoring candidate to the start
            top = max(s for _, s in self.cset.candidates)
            tied = [oid for oid, s in self.cset.candidates if s == top]
            pick = min(tied, key=lambda o: (
                math.dist(self.scene.object_by_id(o).aabb.center, self.scene.start), o))
            return ("resolved", pick)
        if self.rng is not None and "random_select" in self.tool_order:
            pick = self.cset.ids[int(self.rng.integers(len(self.cset.ids)))]
            self.kb.add("tool", f"random_select:{_fact_key(self.description)}", pick)
            return ("resolved", pick)
        raise Unresolvable(
            f"'{self.description}' still ambiguous: {list(self.cset.ids)}")


def refine_target(cset: CandidateSet, scene: SemanticScene, kb: KnowledgeBase,
                  description: str, human=None,
                  tool_order: tuple = DEFAULT_TOOL_ORDER,
                  default_pick: bool = False, rng=None):
    """Narrow a candidate set to a unique target.

    `human` is an answer channel: callable(question, options, description)
    -> object id, or None when no human is available. Returns
    (object id, kb, queries used).
    """
    resolver = TargetResolver(description=description, scene=scene, kb=kb,
                              cset=cset, tool_order=tool_order,
                              default_pick=default_pick, rng=rng)
    while True:
        step = resolver.advance()
        if step[0] == "resolved":
            return step[1], kb, resolver.queries_used
        if human is None:
            step = resolver._fallback()
            return step[1], kb, resolver.queries_used
        reply = human(step[1], step[2], description)
        resolver.answer(reply)


def ground_instruction(instruction, scene: SemanticScene, kb: KnowledgeBase,
                       provider=None, tau: float = DEFAULT_TAU, human=None,
                       tool_order: tuple = DEFAULT_TOOL_ORDER,
                       default_pick: bool = False):
    """Resolve every navigation step of an instruction, in step order.

    Returns (list of object ids, total human queries). The knowledge base is
    shared across steps, so a clarified target is remembered for later steps.
    """
    targets = []
    queries = 0
    for step in instruction.navigation_steps:
        cset = score_candidates(step.target, scene, kb, provider=provider, tau=tau)
        oid, kb, used = refine_target(cset, scene, kb, step.target, human=human,
                                      tool_order=tool_order, default_pick=default_pick)
        targets.append(oid)
        queries += used
    return targets, queries
