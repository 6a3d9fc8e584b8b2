"""Position-guided prompt sentences, caption composition and cloze probes.

Every rendered sentence remembers where each substituted value landed, as
UTF-8 byte spans, so composed captions can be masked, checked, or split into
caption and prompt regions without re-parsing text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

from .config import BASE_TEMPLATES, PipelineConfig
from .errors import EmptyCandidates, MissingSlot, NoSuchSlot, TooManyTags, UnsupportedGrid
from .geometry import BlockGrid, Box, block_box
from .seeding import RecordRandom, record_seed
from .tagging import BlockTag, BlockTagMap

_encode_str = json.encoder.encode_basestring
_dumps = json.JSONEncoder(ensure_ascii=False, separators=(",", ":")).encode

# key order must match the literal in PromptedSample.to_json
_PIPELINE_META = {"caption_index": 0, "n_captions": 0, "n_detections": 0, "occupancy": 0, "out_of_border": 0}.keys()

SEPARATOR = " "
MASK_TOKEN = "[MASK]"
NO_POSITION = "X"
MAX_LIST = 3

NOUN_POSITIONS = (
    "upper left",
    "upper middle",
    "upper right",
    "middle left",
    "center",
    "middle right",
    "bottom left",
    "bottom middle",
    "bottom right",
)

# template id -> alternating literal text and slot names
_P, _O, _COORDS, _OLIST, _PLIST = "P", "O", "COORDS", "OLIST", "PLIST"
TEMPLATES: dict[str, tuple[str, ...]] = {
    "O_IN_BLOCK": ("The ", _O, " is in the block ", _P, "."),
    "BLOCK_LOOKS_LIKE": ("The block ", _P, " looks like ", _O, "."),
    "QA_WHICH_BLOCK": ("The ", _O, " is in which block? In ", _P, "."),
    "O_LOCATED_IN": ("The ", _O, " is located in block ", _P, "."),
    "COORD_HAS_O": ("(", _COORDS, ") has a ", _O, "."),
    "NOUN_BLOCK_HAS_O": ("The block in ", _P, " has a ", _O, "."),
    "BLOCK_HAS_O": ("The block ", _P, " has a ", _O, "."),
    "MULTI_TAG": ("The block ", _P, " has objects ", _OLIST, "."),
    "MULTI_POS": ("The ", _O, " is located in which region? In ", _PLIST, "."),
    "REGION_SYNONYM": ("The object in region ", _P, " looks like ", _O, "."),
}
_SLOT_NAMES = {_P, _O, _COORDS, _OLIST, _PLIST}

# templates of the shape literal, slot, literal, slot, literal
_SIMPLE = {
    tid: parts
    for tid, parts in TEMPLATES.items()
    if len(parts) == 5 and {parts[1], parts[3]} == {_P, _O}
}


class Slot(NamedTuple):
    kind: str  # P, O, X or COORD
    start: int
    end: int
    text: str


class Sentence(NamedTuple):
    text: str
    slots: tuple[Slot, ...]
    template: str


@dataclass(frozen=True)
class PromptedSample:
    id: str
    caption: str
    prompt: str
    composed: str
    slots: tuple[Slot, ...] = ()
    template_id: str = ""
    seed_used: int = 0
    sentence_templates: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "caption": self.caption,
            "prompt": self.prompt,
            "composed": self.composed,
            "template": self.template_id,
            "slots": [
                {"kind": s.kind, "start": s.start, "end": s.end, "text": s.text} for s in self.slots
            ],
            "seed_used": self.seed_used,
            "sentence_templates": list(self.sentence_templates),
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    def to_json(self) -> str:
        """Compact JSON line, identical to ``json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))``."""
        enc = _encode_str
        slots = ",".join(
            f'{{"kind":"{s.kind}","start":{s.start},"end":{s.end},"text":{enc(s.text)}}}' for s in self.slots
        )
        templates = ",".join(f'"{t}"' for t in self.sentence_templates)
        head = (
            f'{{"id":{enc(self.id)},"caption":{enc(self.caption)},"prompt":{enc(self.prompt)},'
            f'"composed":{enc(self.composed)},"template":{enc(self.template_id)},"slots":[{slots}],'
            f'"seed_used":{self.seed_used},"sentence_templates":[{templates}]'
        )
        meta = self.meta
        if not meta:
            return head + "}"
        if meta.keys() == _PIPELINE_META:
            return head + (
                f',"meta":{{"caption_index":{meta["caption_index"]},"n_captions":{meta["n_captions"]},'
                f'"n_detections":{meta["n_detections"]},"occupancy":[{",".join(map(str, meta["occupancy"]))}],'
                f'"out_of_border":{meta["out_of_border"]}}}}}'
            )
        return head + ',"meta":' + _dumps(meta) + "}"

    @classmethod
    def from_dict(cls, obj: dict) -> "PromptedSample":
        return cls(
            id=obj["id"],
            caption=obj["caption"],
            prompt=obj["prompt"],
            composed=obj["composed"],
            slots=tuple(Slot(s["kind"], s["start"], s["end"], s["text"]) for s in obj["slots"]),
            template_id=obj.get("template", ""),
            seed_used=obj.get("seed_used", 0),
            sentence_templates=tuple(obj.get("sentence_templates", ())),
            meta=obj.get("meta", {}),
        )


@dataclass(frozen=True)
class ClozeRecord:
    id: str
    masked_text: str
    targets: tuple[Slot, ...]  # spans of the mask tokens inside masked_text
    mask_kind: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "masked_text": self.masked_text,
            "mask_kind": self.mask_kind,
            "targets": [{"start": t.start, "end": t.end, "text": t.text} for t in self.targets],
        }


def _blen(s: str) -> int:
    return len(s) if s.isascii() else len(s.encode("utf-8"))


def position_phrase(block: Optional[int], grid_n: int, style: str = "numeric") -> str:
    if style not in ("numeric", "noun"):
        raise ValueError(f"unknown position style {style!r}")
    if style == "noun" and grid_n != 3:
        raise UnsupportedGrid(f"noun positions exist only for a 3x3 grid, got n={grid_n}")
    if block is None:
        return NO_POSITION
    if not 0 <= block < grid_n * grid_n:
        raise ValueError(f"block {block} outside 0..{grid_n * grid_n - 1}")
    return NOUN_POSITIONS[block] if style == "noun" else str(block)


def format_coords(box: Box) -> tuple[str, str, str, str]:
    """Box fields rounded half-to-even to whole pixels."""
    return tuple(str(int(round(v))) for v in box)


def _listing(items: Sequence[str]) -> list[str]:
    # "a", "a and b", "a, b and c"
    out: list[str] = []
    for i, item in enumerate(items):
        if i:
            out.append(" and " if i == len(items) - 1 else ", ")
        out.append(item)
    return out


def _pos_kind(p: str) -> str:
    return "X" if p == NO_POSITION else "P"


def render_sentence(
    template: str,
    p: Union[str, Sequence[str], None],
    o: Union[str, Sequence[str], None],
    coords: Optional[Box] = None,
) -> Sentence:
    """Fill ``template`` and record the byte span of every substituted value."""
    simple = _SIMPLE.get(template)
    if simple is not None and type(p) is str and type(o) is str and p and o:
        a, first, b, _, c = simple
        v1, v2 = (p, o) if first == _P else (o, p)
        k1, k2 = ("P" if p != NO_POSITION else "X", "O") if first == _P else ("O", "P" if p != NO_POSITION else "X")
        s1 = len(a)
        e1 = s1 + _blen(v1)
        s2 = e1 + len(b)
        return Sentence(
            a + v1 + b + v2 + c,
            (Slot(k1, s1, e1, v1), Slot(k2, s2, s2 + _blen(v2), v2)),
            template,
        )
    try:
        parts = TEMPLATES[template]
    except KeyError:
        raise MissingSlot(f"unknown template {template!r}") from None
    text: list[str] = []
    slots: list[Slot] = []
    pos = 0

    def put(value: str, kind: Optional[str] = None):
        nonlocal pos
        n = _blen(value)
        if kind is not None:
            slots.append(Slot(kind, pos, pos + n, value))
        text.append(value)
        pos += n

    for part in parts:
        if part not in _SLOT_NAMES:
            put(part)
        elif part == _P:
            if not isinstance(p, str) or not p:
                raise MissingSlot(f"{template} needs a position")
            put(p, _pos_kind(p))
        elif part == _O:
            if not isinstance(o, str) or not o:
                raise MissingSlot(f"{template} needs an object tag")
            put(o, "O")
        elif part == _OLIST:
            tags = [o] if isinstance(o, str) else list(o or ())
            if not tags or not all(tags):
                raise MissingSlot(f"{template} needs 1 to {MAX_LIST} object tags")
            if len(tags) > MAX_LIST:
                raise TooManyTags(f"{template} takes at most {MAX_LIST} tags, got {len(tags)}")
            for i, piece in enumerate(_listing(tags)):
                put(piece, None if i % 2 else "O")
        elif part == _PLIST:
            blocks = [p] if isinstance(p, str) else list(p or ())
            if not blocks or not all(blocks):
                raise MissingSlot(f"{template} needs 1 to {MAX_LIST} positions")
            if len(blocks) > MAX_LIST:
                raise TooManyTags(f"{template} takes at most {MAX_LIST} positions, got {len(blocks)}")
            for i, piece in enumerate(_listing(blocks)):
                put(piece, None if i % 2 else _pos_kind(piece))
        else:  # coordinates
            if coords is None:
                if p == NO_POSITION:
                    put(NO_POSITION, "X")
                    continue
                raise MissingSlot(f"{template} needs box coordinates")
            for i, v in enumerate(format_coords(coords)):
                if i:
                    put(", ")
                put(v, "COORD")
    return Sentence("".join(text), tuple(slots), template)


def render(
    template: str,
    p: Union[str, Sequence[str], None],
    o: Union[str, Sequence[str], None],
    coords: Optional[Box] = None,
) -> str:
    return render_sentence(template, p, o, coords).text


def record_rng(global_seed: int, record_id: str) -> tuple[RecordRandom, int]:
    """Generator seeded from ``(global_seed, record_id)`` alone, and its seed."""
    seed = record_seed(global_seed, record_id)
    return RecordRandom(seed), seed


def sample_object(candidates: Sequence, rng):
    """Uniform pick among ``candidates``.

    ``rng`` is anything with ``randrange``: a :class:`RecordRandom` or a
    ``random.Random``.
    """
    n = len(candidates)
    if n == 0:
        raise EmptyCandidates("no candidates to sample from")
    if n == 1:
        return candidates[0]
    return candidates[rng.randrange(n)]


def _distinct(tags, limit):
    out = []
    for t in tags:
        if t not in out:
            out.append(t)
            if len(out) == limit:
                break
    return out


def build_prompts(
    tagmap: BlockTagMap,
    config: PipelineConfig,
    rng=None,
    grid: Optional[BlockGrid] = None,
) -> list[Sentence]:
    """Prompt sentences for one image.

    Single-object templates give one sentence per occupied block in ascending
    block order, each naming one randomly chosen tag of that block, followed by
    one sentence per off-canvas object (position ``X``) when ``emit_x`` is set.
    ``MULTI_TAG`` lists up to three distinct tags per block, and ``MULTI_POS``
    lists up to three blocks per distinct tag. At most ``config.sentence_cap``
    sentences are returned.
    """
    if rng is None:
        rng = RecordRandom(config.global_seed)
    n = config.grid_n
    template = config.template_id
    cap = config.sentence_cap
    entries = tagmap.entries
    off = tagmap.out_of_border if config.emit_x else ()
    out: list[Sentence] = []

    if template == "MULTI_TAG":
        for b in sorted(entries):
            tags = _distinct((t.tag for t in entries[b]), MAX_LIST)
            out.append(render_sentence(template, str(b), tags))
        if off:
            out.append(render_sentence(template, NO_POSITION, _distinct((t.tag for t in off), MAX_LIST)))
        return out[:cap]

    if template == "MULTI_POS":
        where: dict[str, list[str]] = {}
        for b in sorted(entries):
            for t in entries[b]:
                blocks = where.setdefault(t.tag, [])
                if str(b) not in blocks:
                    blocks.append(str(b))
        for t in off:
            blocks = where.setdefault(t.tag, [])
            if NO_POSITION not in blocks:
                blocks.append(NO_POSITION)
        for tag, blocks in where.items():
            out.append(render_sentence(template, blocks[:MAX_LIST], tag))
        return out[:cap]

    mixed = template == "MIXED"
    noun = template == "NOUN_BLOCK_HAS_O"
    if noun:
        position_phrase(None, n, "noun")  # rejects grids other than 3x3
    jobs = [(b, entries[b]) for b in sorted(entries)]
    jobs.extend((None, [t]) for t in off)
    for b, candidates in jobs[:cap]:
        tmpl = template
        if mixed:
            tmpl = BASE_TEMPLATES[rng.randrange(len(BASE_TEMPLATES))]
            noun = tmpl == "NOUN_BLOCK_HAS_O"
        pick: BlockTag = candidates[0] if len(candidates) == 1 else sample_object(candidates, rng)
        if b is None:
            p = NO_POSITION
        elif noun:
            p = position_phrase(b, n, "noun")
        else:
            p = str(b)
        coords = None
        if tmpl == "COORD_HAS_O" and b is not None:
            coords = pick.box
            if coords is None:
                if grid is None:
                    raise MissingSlot("COORD_HAS_O on boxless tags needs the block grid")
                coords = block_box(grid, b)
        out.append(render_sentence(tmpl, p, pick.tag, coords))
    return out


def compose(
    caption: str,
    sentences: Sequence[Union[Sentence, str]],
    *,
    id: str = "",
    template_id: str = "",
    seed_used: int = 0,
) -> PromptedSample:
    """Append the prompt sentences to ``caption`` after a single space.

    With no sentences the caption is returned untouched as the composed text.
    """
    if not caption:
        raise ValueError("caption must be non-empty")
    if not sentences:
        return PromptedSample(id, caption, "", caption, (), template_id, seed_used, ())
    texts = []
    slots = []
    templates = []
    pos = _blen(caption) + len(SEPARATOR)
    for i, s in enumerate(sentences):
        if i:
            pos += len(SEPARATOR)
        if isinstance(s, str):
            texts.append(s)
            pos += _blen(s)
            continue
        texts.append(s.text)
        templates.append(s.template)
        for sl in s.slots:
            slots.append(Slot(sl.kind, sl.start + pos, sl.end + pos, sl.text))
        pos += _blen(s.text)
    prompt = SEPARATOR.join(texts)
    return PromptedSample(
        id,
        caption,
        prompt,
        caption + SEPARATOR + prompt,
        tuple(slots),
        template_id,
        seed_used,
        tuple(templates),
    )


def make_cloze(sample: PromptedSample, mask_kind: str, mask_token: str = MASK_TOKEN) -> ClozeRecord:
    """Replace every ``mask_kind`` slot (``"P"`` or ``"O"``) by ``mask_token``."""
    if mask_kind not in ("P", "O"):
        raise ValueError(f"mask_kind must be 'P' or 'O', got {mask_kind!r}")
    chosen = [s for s in sample.slots if s.kind == mask_kind]
    if not chosen:
        raise NoSuchSlot(f"sample {sample.id!r} has no {mask_kind} slot")
    src = sample.composed.encode("utf-8")
    token = mask_token.encode("utf-8")
    pieces = []
    targets = []
    cursor = 0
    out_len = 0
    for s in chosen:
        pieces.append(src[cursor : s.start])
        out_len += s.start - cursor
        targets.append(Slot(mask_kind, out_len, out_len + len(token), s.text))
        pieces.append(token)
        out_len += len(token)
        cursor = s.end
    pieces.append(src[cursor:])
    return ClozeRecord(sample.id, b"".join(pieces).decode("utf-8"), tuple(targets), mask_kind)


def fill_cloze(cloze: ClozeRecord) -> str:
    """Put the ground-truth strings back in place of the mask tokens."""
    src = cloze.masked_text.encode("utf-8")
    pieces = []
    cursor = 0
    for t in cloze.targets:
        pieces.append(src[cursor : t.start])
        pieces.append(t.text.encode("utf-8"))
        cursor = t.end
    pieces.append(src[cursor:])
    return b"".join(pieces).decode("utf-8")


_WORD = re.compile(r"\S+")


def pretext_sequence(sample: PromptedSample) -> list[tuple[str, bool]]:
    """Words of the composed text, flagged True when they belong to the prompt."""
    if not sample.prompt:
        return [(w, False) for w in sample.composed.split()]
    boundary = len(sample.caption) + len(SEPARATOR)
    return [(m.group(), m.start() >= boundary) for m in _WORD.finditer(sample.composed)]
