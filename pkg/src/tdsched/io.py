"""JSON instance files, 3DM text files, profile parsing and report rendering."""

from __future__ import annotations

import hashlib
import json
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .core import GameInstance, Machine, Number, NumericMode, ProcessingFunction, to_fraction
from .errors import DomainError, InvalidInstance, MalformedProfile, ParseError
from .generators import ThreeDMInstance
from .schedule import Profile, Schedule, check_profile

SIGNIFICANT_DIGITS = 12


# ---------------------------------------------------------------- numbers


def encode_number(x: Number) -> str | float:
    """Rationals become ``"p/q"`` (or ``"p"``) strings; floats stay JSON numbers."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def decode_number(raw: Any, mode: NumericMode, where: str) -> Number:
    if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
        raise ParseError(f"{where}: expected a number or 'p/q' string, got {raw!r}")
    try:
        return mode.coerce(raw)
    except (DomainError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def decimal_string(x: Number, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Deterministic decimal rendering with ``digits`` significant digits."""
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            return str(x)
        return format(x, f".{digits}g")
    frac = to_fraction(x)
    with localcontext() as ctx:
        ctx.prec = digits
        value = Decimal(frac.numerator) / Decimal(frac.denominator)
    return format(value, f".{digits}g")


def render_number(x: Number | None) -> dict[str, Any] | None:
    """Exact value (when rational) next to its decimal rendering."""
    if x is None:
        return None
    if isinstance(x, Fraction):
        return {"exact": encode_number(x), "decimal": decimal_string(x)}
    return {"exact": None, "decimal": decimal_string(x)}


# -------------------------------------------------------------- instances


def instance_to_dict(game: GameInstance) -> dict[str, Any]:
    jobs = []
    for i, pf in enumerate(game.jobs):
        entry: dict[str, Any] = {"id": i}
        if game.names:
            entry["name"] = game.names[i]
        entry.update(b=encode_number(pf.b), a=encode_number(pf.a), sign=pf.sign)
        if pf.tau is not None:
            entry["tau"] = encode_number(pf.tau)
        jobs.append(entry)
    machines = [
        {"id": mach.id, "speed": encode_number(mach.speed), "priority": list(mach.priority)}
        for mach in game.machines
    ]
    out: dict[str, Any] = {
        "numeric_mode": game.numeric_mode.kind,
        "tol": game.numeric_mode.tol,
        "jobs": jobs,
        "machines": machines,
    }
    if game.meta:
        out["meta"] = game.meta
    return out


def _field(obj: dict, key: str, where: str, required: bool = True) -> Any:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        if required:
            raise ParseError(f"{where}: missing field '{key}'")
        return None
    return obj[key]


def instance_from_dict(doc: Any) -> GameInstance:
    """Decode an instance document, naming the offending field on failure."""
    kind = _field(doc, "numeric_mode", "instance", required=False) or "rational"
    tol = _field(doc, "tol", "instance", required=False)
    try:
        mode = NumericMode(kind, 1e-9 if tol is None else float(tol))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"instance.numeric_mode: {exc}") from None
    raw_jobs = _field(doc, "jobs", "instance")
    raw_machines = _field(doc, "machines", "instance")
    if not isinstance(raw_jobs, list) or not isinstance(raw_machines, list):
        raise ParseError("instance: 'jobs' and 'machines' must be arrays")
    by_id: dict[int, tuple[ProcessingFunction, str | None]] = {}
    for k, raw in enumerate(raw_jobs):
        where = f"jobs[{k}]"
        jid = _field(raw, "id", where)
        if not isinstance(jid, int) or isinstance(jid, bool):
            raise ParseError(f"{where}.id: expected an integer")
        if jid in by_id:
            raise ParseError(f"{where}.id: duplicate id {jid}")
        sign = _field(raw, "sign", where, required=False)
        sign = 1 if sign is None else sign
        if sign not in (1, -1):
            raise ParseError(f"{where}.sign: expected +1 or -1")
        b = decode_number(_field(raw, "b", where), mode, f"{where}.b")
        a = decode_number(_field(raw, "a", where), mode, f"{where}.a")
        tau_raw = _field(raw, "tau", where, required=sign == -1)
        tau = None if tau_raw is None else decode_number(tau_raw, mode, f"{where}.tau")
        try:
            pf = ProcessingFunction(b, a, sign, tau)
        except InvalidInstance as exc:
            raise ParseError(f"{where}: {exc}") from None
        name = raw.get("name")
        by_id[jid] = (pf, None if name is None else str(name))
    if sorted(by_id) != list(range(len(by_id))):
        raise ParseError("jobs: ids must be 0..n-1")
    jobs = [by_id[i][0] for i in range(len(by_id))]
    names = [by_id[i][1] for i in range(len(by_id))]
    if any(nm is None for nm in names) and not all(nm is None for nm in names):
        raise ParseError("jobs: either every job has a name or none does")
    machines = []
    for k, raw in enumerate(sorted(raw_machines, key=lambda r: r.get("id", 0) if isinstance(r, dict) else 0)):
        where = f"machines[{k}]"
        mid = _field(raw, "id", where)
        speed = decode_number(_field(raw, "speed", where), mode, f"{where}.speed")
        prio = _field(raw, "priority", where)
        if not isinstance(prio, list) or not all(isinstance(x, int) for x in prio):
            raise ParseError(f"{where}.priority: expected a list of job ids")
        machines.append(Machine(mid, speed, tuple(prio)))
    meta = _field(doc, "meta", "instance", required=False) or {}
    try:
        return GameInstance(
            tuple(jobs), tuple(machines), mode, None if names[0] is None else tuple(names), meta
        )
    except InvalidInstance as exc:
        raise ParseError(f"instance: {exc}") from None


def instance_json(game: GameInstance) -> str:
    return json.dumps(instance_to_dict(game), indent=2, sort_keys=True) + "\n"


def instance_digest(game: GameInstance) -> str:
    """SHA-256 of the canonical encoding without ``meta``."""
    doc = instance_to_dict(game)
    doc.pop("meta", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_json(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_instance(path: str | Path) -> GameInstance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    return instance_from_dict(parse_json(text, str(path)))


def save_instance(game: GameInstance, path: str | Path) -> None:
    Path(path).write_text(instance_json(game))


# ---------------------------------------------------------------- 3DM text


def parse_3dm(text: str, source: str = "<input>") -> ThreeDMInstance:
    """First line ``n t``, then ``t`` lines ``x y z`` with 0-based indices."""
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise ParseError(f"{source}: empty file")
    lineno, head = lines[0]
    if len(head) != 2 or not all(tok.lstrip("-").isdigit() for tok in head):
        raise ParseError(f"{source}: line {lineno}: expected 'n t'")
    n, t = int(head[0]), int(head[1])
    body = lines[1:]
    if len(body) != t:
        raise ParseError(f"{source}: header announces {t} triples, found {len(body)}")
    triples = []
    for lineno, toks in body:
        if len(toks) != 3 or not all(tok.lstrip("-").isdigit() for tok in toks):
            raise ParseError(f"{source}: line {lineno}: expected three integers")
        triples.append(tuple(int(tok) for tok in toks))
    try:
        return ThreeDMInstance(n, tuple(triples))
    except InvalidInstance as exc:
        raise ParseError(f"{source}: {exc}") from None


def format_3dm(inst: ThreeDMInstance) -> str:
    rows = [f"{inst.n} {len(inst.triples)}"] + [f"{x} {y} {z}" for x, y, z in inst.triples]
    return "\n".join(rows) + "\n"


def load_3dm(path: str | Path) -> ThreeDMInstance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    return parse_3dm(text, str(path))


# ---------------------------------------------------------------- profiles


def parse_profile(game: GameInstance, text: str) -> Profile:
    """Accept ``"u:0,v:1"`` (job:machine pairs), ``"0,1"`` or a JSON array."""
    text = text.strip()
    if not text:
        raise MalformedProfile("empty profile")
    if text.startswith("["):
        raw = parse_json(text, "profile")
        if not isinstance(raw, list) or not all(isinstance(x, int) for x in raw):
            raise MalformedProfile("profile array must hold machine ids")
        return check_profile(game, raw)
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if all(":" in p for p in parts):
        prof = [-1] * game.n
        for part in parts:
            token, _, mach = part.rpartition(":")
            try:
                job = game.job_index(token.strip())
                prof[job] = int(mach)
            except (InvalidInstance, ValueError):
                raise MalformedProfile(f"cannot read assignment {part!r}") from None
        missing = [game.label(i) for i, j in enumerate(prof) if j < 0]
        if missing:
            raise MalformedProfile(f"no machine given for jobs {', '.join(missing)}")
        return check_profile(game, prof)
    try:
        return check_profile(game, [int(p) for p in parts])
    except ValueError:
        raise MalformedProfile(f"cannot read profile {text!r}") from None


def profile_to_dict(game: GameInstance, profile: Sequence[int]) -> dict[str, int]:
    return {game.label(i): int(j) for i, j in enumerate(profile)}


def schedule_to_dict(game: GameInstance, sched: Schedule) -> dict[str, Any]:
    jobs = []
    for i in range(game.n):
        jobs.append(
            {
                "job": game.label(i),
                "machine": sched.profile[i],
                "start": render_number(sched.start[i]),
                "duration": render_number(sched.duration[i]),
                "completion": render_number(sched.completion[i]),
            }
        )
    return {
        "profile": list(sched.profile),
        "jobs": jobs,
        "sequences": [[game.label(i) for i in seq] for seq in sched.sequences],
        "loads": [render_number(x) for x in sched.loads],
        "makespan": render_number(sched.makespan),
    }
