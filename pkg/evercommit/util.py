from __future__ import annotations

import json
import os
import secrets
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable, cast

import numpy as np
import numpy.typing as npt

Bits = npt.NDArray[np.uint8]

_MASK64 = (1 << 64) - 1


def to_jsonable(obj: Any) -> Any:
    if hasattr(obj, "to_json") and callable(obj.to_json):
        return to_jsonable(obj.to_json())
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(cast(Any, obj)).items()}
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps_pretty(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False)


def env_bool(name: str, default: bool = False) -> bool:
    val = os.environ.get(name)
    if val is None:
        return default
    return val.strip().lower() in {"1", "true", "yes", "y", "on"}


def env_int(name: str) -> int | None:
    """Parse an integer environment variable (decimal or 0x-hex); None when unset or blank."""
    val = os.environ.get(name)
    if val is None or not val.strip():
        return None
    try:
        return int(val.strip(), 0)
    except ValueError as e:
        raise ValueError(f"{name} must be an integer, got {val!r}") from e


def find_app_root(start: Path | None = None) -> Path:
    """Best-effort app root finder.

    Prefers a folder that contains pyproject.toml or README.md (source checkout),
    otherwise falls back to the current working directory.
    """
    try:
        cur = (start or Path(__file__).resolve().parent)
        cur = cur if isinstance(cur, Path) else Path(str(cur))
        for _ in range(8):
            if (cur / "pyproject.toml").is_file() or (cur / "README.md").is_file():
                return cur
            if cur.parent == cur:
                break
            cur = cur.parent
    except Exception:
        pass
    try:
        return Path.cwd()
    except Exception:
        return Path(__file__).resolve().parent


# ---------------------------------------------------------------------------
# Bit strings (numpy uint8 arrays holding 0/1)
# ---------------------------------------------------------------------------


def as_bits(value: Iterable[int] | str | npt.ArrayLike) -> Bits:
    """Coerce a 0/1 sequence or a '0101' string into a uint8 bit array.

    Strings are read left to right, so as_bits("10")[0] == 1.
    """
    if isinstance(value, str):
        if any(ch not in "01" for ch in value):
            raise ValueError(f"not a bit string: {value!r}")
        return np.fromiter((1 if ch == "1" else 0 for ch in value), dtype=np.uint8, count=len(value))
    arr = np.asarray(value)
    if arr.ndim != 1:
        raise ValueError("bit strings must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit strings may only contain 0 and 1")
    return arr.astype(np.uint8, copy=True)


def bits_to_str(bits: Bits) -> str:
    return "".join("1" if b else "0" for b in bits.tolist())


def bits_to_hex(bits: Bits) -> str:
    """Hex encoding, LSB-first within each byte (bit 0 is the low bit of byte 0)."""
    if bits.size == 0:
        return ""
    return np.packbits(bits.astype(np.uint8), bitorder="little").tobytes().hex()


def hex_to_bits(text: str, length: int) -> Bits:
    raw = bytes.fromhex(text)
    if len(raw) * 8 < length:
        raise ValueError(f"hex string too short for {length} bits")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:length].astype(np.uint8)


def xor_bits(a: Bits, b: Bits) -> Bits:
    if a.shape != b.shape:
        raise ValueError(f"xor of bit strings with different lengths ({a.size} vs {b.size})")
    return np.bitwise_xor(a, b).astype(np.uint8)


def random_bits(rng: np.random.Generator, length: int) -> Bits:
    return rng.integers(0, 2, size=int(length), dtype=np.uint8)


def bits_key(bits: Bits) -> bytes:
    """Hashable, length-unambiguous dictionary key for a bit string."""
    return bits.astype(np.uint8, copy=False).tobytes()


def bits_to_int(bits: Bits) -> int:
    """Little-endian integer value (bit 0 is the least significant)."""
    return int(sum(int(b) << i for i, b in enumerate(bits.tolist())))


def int_to_bits(value: int, length: int) -> Bits:
    return np.array([(value >> i) & 1 for i in range(length)], dtype=np.uint8)


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed: splitmix64(master XOR splitmix64(index + 1))."""
    return splitmix64((int(master) & _MASK64) ^ splitmix64(int(index) + 1))


def entropy_seed() -> int:
    """Fresh non-zero 64-bit seed from the OS."""
    while True:
        seed = secrets.randbits(64)
        if seed:
            return seed
