"""Experiment configuration: JSON documents checked against a versioned schema.

The schema lives next to this module as ``config.schema.json``.  Unknown
keys are rejected.  :func:`load_config` returns the resolved document with
defaults filled in, which is what reports echo back.
"""

from __future__ import annotations

import copy
import json
import re
from importlib import resources

import jsonschema

from .errors import ConfigError

SCHEMA_VERSION = 1

# experiment kind -> config section
SECTIONS = {
    "gaussfit": "gaussfit",
    "estimate": "estimate",
    "pilot-search": "pilot_search",
    "detect2": "detect2",
    "multiuser": "multiuser",
    "timing": "timing",
}

DEFAULTS = {
    "gaussfit": {"bins": 100, "scales": [1.0]},
    "estimate": {"patterns": "all"},
    "detection": {"floor": 1e-6, "tail_epsilon": 1e-10},
    "detect2": {"tail_epsilon": 1e-10},
    "multiuser": {"order": "ascending", "tail_epsilon": 1e-10},
    "timing": {"repetitions": 11, "warmup": 2, "order": "ascending"},
}
TOP_DEFAULTS = {"threads": 1, "chunk_size": 1 << 16}

_PATTERN_RE = re.compile(r"\d+")


def load_schema() -> dict:
    text = resources.files("uvsdma").joinpath("config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _path_str(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _locate(text: str | None, parts) -> int | None:
    """Best-effort line number of the deepest object key along ``parts``."""
    if not text:
        return None
    pos = 0
    found = None
    for p in parts:
        if isinstance(p, str):
            hit = text.find(f'"{p}"', pos)
            if hit < 0:
                break
            pos = found = hit
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def parse_pattern(label: str, K: int) -> tuple:
    beta = tuple(int(x) for x in _PATTERN_RE.findall(label))
    if not beta or any(b < 1 or b > K for b in beta) or len(set(beta)) != len(beta):
        raise ValueError(f"pattern {label!r} needs distinct weights in 1..{K}")
    return beta


def _check_lengths(doc, text):
    """Cross-field checks that JSON Schema cannot express."""

    def fail(msg, parts):
        raise ConfigError(msg, _path_str(parts), _locate(text, parts))

    kind = doc["kind"]
    sec = doc.get(SECTIONS[kind], {})
    if kind == "gaussfit":
        w = sec.get("weights")
        if w is not None:
            if len(w) != len(sec["intensity"]):
                fail("weights and intensity must have the same length", ["gaussfit", "weights"])
            if not any(w):
                fail("weights must not be all zero", ["gaussfit", "weights"])
    elif kind == "estimate":
        K = len(sec["sectors"][0]["gains"])
        for i, s in enumerate(sec["sectors"]):
            if len(s["gains"]) != K:
                fail(f"every sector needs K={K} gains", ["estimate", "sectors", i, "gains"])
        if sec.get("patterns", "all") != "all":
            for i, lab in enumerate(sec["patterns"]):
                try:
                    parse_pattern(lab, K)
                except ValueError as exc:
                    fail(str(exc), ["estimate", "patterns", i])
        det = sec.get("detection")
        if det is not None:
            u = det["users"]
            if u[0] == u[1] or max(u) > K:
                fail(f"detection users must be two distinct indices in 1..{K}", ["estimate", "detection", "users"])
    elif kind == "pilot-search":
        K = sec["K"]
        for i, s in enumerate(sec["sectors"]):
            if "gains" in s and len(s["gains"]) != K:
                fail(f"gains must have K={K} entries", ["pilot_search", "sectors", i, "gains"])
    elif kind == "detect2":
        for i, p in enumerate(sec["problems"]):
            M = len(p["noise"])
            for key in ("gain_a", "gain_b"):
                if len(p[key]) != M:
                    fail(f"{key} must have M={M} entries like noise", ["detect2", "problems", i, key])
    else:
        for i, s in enumerate(sec["scenarios"]):
            M = len(s["noise"])
            if len(s["desired"]) != M:
                fail(f"desired must have M={M} entries like noise", [SECTIONS[kind], "scenarios", i, "desired"])
            for k, row in enumerate(s["interferers"]):
                if len(row) != M:
                    fail(f"interferer rows must have M={M} entries", [SECTIONS[kind], "scenarios", i, "interferers", k])


def resolve(doc: dict) -> dict:
    out = copy.deepcopy(doc)
    for k, v in TOP_DEFAULTS.items():
        out.setdefault(k, v)
    sec_name = SECTIONS[out["kind"]]
    sec = out[sec_name]
    for k, v in DEFAULTS.get(sec_name, {}).items():
        sec.setdefault(k, v)
    if "detection" in sec:
        for k, v in DEFAULTS["detection"].items():
            sec["detection"].setdefault(k, v)
    return out


def validate_document(doc, text: str | None = None) -> dict:
    """Validate a parsed config and return it resolved.  Raises :class:`ConfigError`."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = list(validator.iter_errors(doc))
    if errors:
        # report the deepest, most specific failure
        err = max(errors, key=lambda e: len(e.absolute_path))
        parts = list(err.absolute_path)
        raise ConfigError(err.message, _path_str(parts), _locate(text, parts))
    _check_lengths(doc, text)
    return resolve(doc)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", str(path)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", "$", exc.lineno) from exc
    return validate_document(doc, text)
