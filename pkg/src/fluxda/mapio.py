"""Text persistence for synoptic maps and ensemble checkpoints.

Map file::

    ADAPTMAP v1 <n_lat> <n_lon> <epoch_seconds>
    <n_lon values for row 0, the southernmost row>
    ...

Values are written with 17 significant digits so doubles round-trip exactly.
A checkpoint is a directory with one map file per member and a ``manifest``
of ``key = value`` lines.
"""

import math
import os

import numpy as np

from .ensemble import check_ensemble

MAP_TAG = "ADAPTMAP v1"
MANIFEST = "manifest"


class MapFormatError(ValueError):
    pass


class CheckpointError(RuntimeError):
    pass


def _fmt(x):
    return format(x, ".17g")


def write_map(bmap, epoch, path):
    bmap = np.asarray(bmap, dtype=float)
    if bmap.ndim != 2:
        raise ValueError(f"map must be 2-D, got shape {bmap.shape}")
    if not np.all(np.isfinite(bmap)):
        raise ValueError("map contains non-finite values")
    n_lat, n_lon = bmap.shape
    lines = [f"{MAP_TAG} {n_lat} {n_lon} {_fmt(float(epoch))}"]
    lines += [" ".join(map(_fmt, row)) for row in bmap.tolist()]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_map(path):
    """Return ``(map, epoch_seconds)``; raise :class:`MapFormatError` on bad input."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 5 or " ".join(head[:2]) != MAP_TAG:
        raise MapFormatError(f"{path}: line 1: bad header")
    try:
        n_lat, n_lon, epoch = int(head[2]), int(head[3]), float(head[4])
    except ValueError:
        raise MapFormatError(f"{path}: line 1: bad header fields") from None
    if n_lat < 1 or n_lon < 1 or not math.isfinite(epoch):
        raise MapFormatError(f"{path}: line 1: bad header fields")
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != n_lat:
        deficit = f", {n_lat - len(rows)} missing" if len(rows) < n_lat else ""
        raise MapFormatError(f"{path}: header declares {n_lat} rows, found {len(rows)}{deficit}")
    out = np.empty((n_lat, n_lon))
    for i, line in enumerate(rows):
        parts = line.split()
        if len(parts) != n_lon:
            raise MapFormatError(f"{path}: line {i + 2}: expected {n_lon} values, found {len(parts)}")
        try:
            out[i] = [float(v) for v in parts]
        except ValueError:
            raise MapFormatError(f"{path}: line {i + 2}: unparsable value") from None
        if not np.all(np.isfinite(out[i])):
            raise MapFormatError(f"{path}: line {i + 2}: non-finite value")
    return out, epoch


def member_filename(m):
    return f"member_{m:04d}.map"


def write_checkpoint(ens, epoch, rng_state, directory):
    """Write members and a manifest recording epoch, size and RNG state.

    ``rng_state`` is a flat dict of integers (seed and next step for the
    counter-based streams).
    """
    ens = check_ensemble(ens)
    os.makedirs(directory, exist_ok=True)
    k, n_lat, n_lon = ens.shape
    names = [member_filename(m) for m in range(k)]
    for m, name in enumerate(names):
        write_map(ens[m], epoch, os.path.join(directory, name))
    lines = [f"epoch = {_fmt(float(epoch))}", f"k = {k}", f"n_lat = {n_lat}", f"n_lon = {n_lon}"]
    lines += [f"rng.{key} = {int(value)}" for key, value in sorted(rng_state.items())]
    lines += [f"member = {name}" for name in names]
    with open(os.path.join(directory, MANIFEST), "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_checkpoint(directory):
    """Return ``(ensemble, epoch, rng_state)`` from a checkpoint directory."""
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise CheckpointError(f"{directory}: no manifest")
    fields, members, rng_state = {}, [], {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep:
                raise CheckpointError(f"{path}: line {lineno}: expected 'key = value'")
            if key == "member":
                members.append(value)
            elif key.startswith("rng."):
                rng_state[key[4:]] = int(value)
            else:
                fields[key] = value
    try:
        k, n_lat, n_lon = int(fields["k"]), int(fields["n_lat"]), int(fields["n_lon"])
        epoch = float(fields["epoch"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: incomplete manifest ({exc})") from None
    if len(members) != k:
        raise CheckpointError(f"{path}: manifest declares k = {k} but lists {len(members)} members")
    ens = np.empty((k, n_lat, n_lon))
    for m, name in enumerate(members):
        member_path = os.path.join(directory, name)
        if not os.path.exists(member_path):
            raise CheckpointError(f"{directory}: missing member file {name}")
        member, _ = read_map(member_path)
        if member.shape != (n_lat, n_lon):
            raise CheckpointError(f"{member_path}: shape {member.shape} does not match manifest")
        ens[m] = member
    return ens, epoch, rng_state
