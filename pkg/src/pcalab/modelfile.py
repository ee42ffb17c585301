"""Plain-text model files.

A model is a list of ``key = value`` lines (``#`` starts a comment):

    dim = 2
    sides = 64,64
    beta = 1.0
    h = 0
    k.0.0 = 0
    k.1.0 = 1
    k.0.1 = 1
    bc = plus

Kernel offsets are given one per line as ``k.<c1>.<c2>... = weight``;
the mirror offset is filled in automatically, and conflicting values
for an offset and its mirror are an error.  ``bc`` is ``periodic``,
``plus``, ``minus`` or ``file:<path>`` pointing at explicit exterior
spins (one ``x y ... spin`` line per site).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .lattice import (
    BoundaryCondition,
    Box,
    CouplingKernel,
    Fixed,
    ModelError,
    PcaParams,
    Periodic,
)


@dataclass(frozen=True)
class ModelSpec:
    """Resolved model: geometry, parameters, boundary, and provenance."""

    box: Box | None
    params: PcaParams | None
    bc: BoundaryCondition | None
    bc_name: str
    resolved: tuple[tuple[str, str], ...]

    def require(self, *fields: str) -> "ModelSpec":
        missing = [f for f in fields if getattr(self, f) is None]
        if missing:
            raise ModelError(f"model is missing required settings: {', '.join(missing)}")
        return self


def parse_entries(text: str) -> dict[str, str]:
    """``key = value`` lines to an ordered dict; duplicate keys are errors."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ModelError(f"line {lineno}: empty key or value in {raw!r}")
        if key in entries:
            raise ModelError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def apply_overrides(entries: dict[str, str], overrides) -> dict[str, str]:
    """Apply ``key=value`` strings on top of parsed entries."""
    merged = dict(entries)
    for item in overrides:
        if "=" not in item:
            raise ModelError(f"override {item!r} is not of the form key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        merged[key] = value
    return merged


def _parse_ints(value: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in value.split(","))
    except ValueError as exc:
        raise ModelError(f"cannot parse {what} from {value!r}") from exc


def _parse_kernel(entries: dict[str, str], dim: int) -> CouplingKernel:
    given: dict[tuple[int, ...], float] = {}
    for key, value in entries.items():
        if not key.startswith("k."):
            continue
        parts = key.split(".")[1:]
        if len(parts) != dim:
            raise ModelError(f"kernel key {key!r} does not have {dim} coordinates")
        try:
            offset = tuple(int(p) for p in parts)
            weight = float(value)
        except ValueError as exc:
            raise ModelError(f"cannot parse kernel entry {key} = {value}") from exc
        if offset in given and given[offset] != weight:
            raise ModelError(f"kernel offset {offset} given twice with different values")
        given[offset] = weight
    completed: dict[tuple[int, ...], float] = {}
    for offset, weight in given.items():
        mirror = tuple(-c for c in offset)
        for o, w in ((offset, weight), (mirror, weight)):
            if o in completed and completed[o] != w:
                raise ModelError(
                    f"kernel offsets {offset} and {mirror} conflict: "
                    f"{completed[o]} vs {w}"
                )
            completed[o] = w
    return CouplingKernel(completed, dim=dim)


def _parse_bc(value: str, base_dir: str | None) -> BoundaryCondition:
    if value == "periodic":
        return Periodic()
    if value == "plus":
        return Fixed.uniform(1)
    if value == "minus":
        return Fixed.uniform(-1)
    if value.startswith("file:"):
        path = value[len("file:"):]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            with open(path) as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise ModelError(f"cannot read boundary file {path}: {exc}") from exc
        spins = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                site = tuple(int(p) for p in parts[:-1])
                spin = int(parts[-1])
            except ValueError as exc:
                raise ModelError(
                    f"{path} line {lineno}: expected 'x y ... spin'"
                ) from exc
            spins[site] = spin
        return Fixed(spins)
    raise ModelError(f"unknown boundary condition {value!r}")


def build_model(entries: dict[str, str], base_dir: str | None = None) -> ModelSpec:
    """Assemble a ModelSpec from parsed entries; absent parts stay None."""
    known_scalar = {"dim", "sides", "origin", "beta", "h", "bc"}
    for key in entries:
        if key not in known_scalar and not key.startswith("k."):
            raise ModelError(f"unknown model key {key!r}")

    dim = int(entries.get("dim", "2"))
    if dim < 1:
        raise ModelError(f"dim must be positive, got {dim}")

    box = None
    if "sides" in entries:
        sides = _parse_ints(entries["sides"], "sides")
        if len(sides) != dim:
            raise ModelError(f"sides {sides} do not match dim {dim}")
        origin = (0,) * dim
        if "origin" in entries:
            origin = _parse_ints(entries["origin"], "origin")
            if len(origin) != dim:
                raise ModelError(f"origin {origin} does not match dim {dim}")
        box = Box(sides=sides, origin=origin)

    kernel = _parse_kernel(entries, dim)

    params = None
    if "beta" in entries:
        try:
            beta = float(entries["beta"])
            h = float(entries.get("h", "0"))
        except ValueError as exc:
            raise ModelError("beta and h must be numbers") from exc
        params = PcaParams(beta=beta, h=h, kernel=kernel)

    bc_name = entries.get("bc", "periodic")
    bc = _parse_bc(bc_name, base_dir)

    resolved = [("dim", str(dim))]
    if box is not None:
        resolved.append(("sides", ",".join(str(s) for s in box.sides)))
        resolved.append(("origin", ",".join(str(c) for c in box.origin)))
    if params is not None:
        resolved.append(("beta", repr(params.beta)))
        resolved.append(("h", repr(params.h)))
    for offset, weight in kernel.weights:
        resolved.append(("k." + ".".join(str(c) for c in offset), repr(weight)))
    resolved.append(("bc", bc_name))
    return ModelSpec(
        box=box, params=params, bc=bc, bc_name=bc_name, resolved=tuple(resolved)
    )


def load_model(path: str, overrides=()) -> ModelSpec:
    """Read, override and build a model file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    entries = apply_overrides(parse_entries(text), overrides)
    return build_model(entries, base_dir=os.path.dirname(os.path.abspath(path)))


def model_from_overrides(overrides) -> ModelSpec:
    """Build a model purely from --set style overrides."""
    return build_model(apply_overrides({}, overrides))
