"""File formats.

Machine image (text)::

    # bayesmachine image v1
    n_rows=4
    n_columns=4
    entries_per_array=8
    has_prior_column=0
    entry,r0c0,r0c1,...,r3c3
    0,FF,1A,...
    ...
    prior,80,FF,...        (only when has_prior_column=1; one byte per row)

One line per array entry; each field is the two-digit hex byte stored by the
array of that row and column.

Likelihood table CSV: header ``row,column,entry,value`` then one line per
cell; an optional ``prior`` block uses ``row,-1,-1,value``.

Gesture dataset CSV: ``subject,class,rep,t,ax,ay,az`` with ``t`` in seconds.

Inference trace CSV: ``cycle,row,bit`` with cycles counted from 1.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .gesture import GaussianModel, ImuTrace
from .machine import MachineImage
from .oracle import LikelihoodTable
from .trace import InferenceTrace

IMAGE_MAGIC = "# bayesmachine image v1"


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_image(image: MachineImage, path) -> None:
    cfg = image.config
    b = image.byte_tensor()
    names = [f"r{r}c{c}" for r in range(cfg.n_rows) for c in range(cfg.n_columns)]
    lines = [
        IMAGE_MAGIC,
        f"n_rows={cfg.n_rows}",
        f"n_columns={cfg.n_columns}",
        f"entries_per_array={cfg.entries_per_array}",
        f"has_prior_column={int(cfg.has_prior_column)}",
        "entry," + ",".join(names),
    ]
    for e in range(cfg.entries_per_array):
        row = [f"{b[r, c, e]:02X}" for r in range(cfg.n_rows) for c in range(cfg.n_columns)]
        lines.append(f"{e}," + ",".join(row))
    if image.prior is not None:
        lines.append("prior," + ",".join(f"{p:02X}" for p in image.prior))
    Path(path).write_text("\n".join(lines) + "\n")


def read_image(path) -> MachineImage:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataFormatError(f"cannot read image {path}: {exc}") from exc
    if not lines or lines[0].strip() != IMAGE_MAGIC:
        raise DataFormatError(f"{path}: line 1: not a machine image")
    meta = {}
    for lineno in range(2, 6):
        line = lines[lineno - 1] if lineno <= len(lines) else ""
        key, sep, val = line.partition("=")
        try:
            if not sep:
                raise ValueError("expected key=value")
            meta[key.strip()] = int(val)
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    try:
        n_rows, n_cols = meta["n_rows"], meta["n_columns"]
        n_entries, has_prior = meta["entries_per_array"], bool(meta["has_prior_column"])
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing header field {exc}") from exc
    values = np.zeros((n_rows, n_cols, n_entries), dtype=np.int64)
    seen = set()
    prior = None
    for lineno, line in enumerate(lines[6:], start=7):
        fields = line.strip().split(",")
        if fields == [""]:
            continue
        try:
            if fields[0] == "prior":
                prior = [int(x, 16) for x in fields[1:]]
                if len(prior) != n_rows:
                    raise ValueError("wrong prior length")
                continue
            e = int(fields[0])
            row = [int(x, 16) for x in fields[1:]]
            if len(row) != n_rows * n_cols or not 0 <= e < n_entries:
                raise ValueError("wrong field count or entry index")
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
        values[:, :, e] = np.array(row).reshape(n_rows, n_cols)
        seen.add(e)
    if len(seen) != n_entries:
        raise DataFormatError(f"{path}: expected {n_entries} entry lines, found {len(seen)}")
    if has_prior != (prior is not None):
        raise DataFormatError(f"{path}: prior line does not match has_prior_column")
    return MachineImage.from_bytes(values, prior)


def write_likelihood_csv(table: LikelihoodTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "column", "entry", "value"])
        for (r, c, e), v in np.ndenumerate(table.values):
            w.writerow([r, c, e, repr(float(v))])
        if table.prior is not None:
            for r, v in enumerate(table.prior):
                w.writerow([r, -1, -1, repr(float(v))])


def read_likelihood_csv(path, shape: tuple[int, int, int] | None = None) -> LikelihoodTable:
    """Load a likelihood table; ``shape`` (rows, columns, entries) is checked when given.

    Without ``shape`` the dimensions are inferred from the largest indices.
    """
    cells, prior = {}, {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read likelihood table {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["row", "column", "entry", "value"]:
            raise DataFormatError(f"{path}: line 1: expected header row,column,entry,value")
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            try:
                if len(fields) != 4:
                    raise ValueError(f"expected 4 fields, got {len(fields)}")
                r, c, e = (int(x) for x in fields[:3])
                v = float(fields[3])
                if r < 0 or not np.isfinite(v) or v < 0:
                    raise ValueError("negative index or invalid likelihood")
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
            if c == -1 and e == -1:
                prior[r] = v
            elif c < 0 or e < 0:
                raise DataFormatError(f"{path}: line {lineno}: negative index")
            else:
                cells[(r, c, e)] = v
    if not cells:
        raise DataFormatError(f"{path}: no likelihood values")
    inferred = tuple(max(k[i] for k in cells) + 1 for i in range(3))
    if shape is not None and tuple(shape) != inferred:
        raise DataFormatError(f"{path}: table shape {inferred} does not match expected {tuple(shape)}")
    if len(cells) != inferred[0] * inferred[1] * inferred[2]:
        raise DataFormatError(f"{path}: table is incomplete")
    values = np.zeros(inferred)
    for k, v in cells.items():
        values[k] = v
    prior_arr = None
    if prior:
        if sorted(prior) != list(range(inferred[0])):
            raise DataFormatError(f"{path}: prior must list every row exactly once")
        prior_arr = np.array([prior[r] for r in range(inferred[0])])
    try:
        return LikelihoodTable(values, prior_arr)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def write_dataset_csv(traces, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject", "class", "rep", "t", "ax", "ay", "az"])
        for tr in traces:
            for i, (ax, ay, az) in enumerate(tr.samples):
                w.writerow([tr.subject, tr.label, tr.rep, f"{i / tr.sample_rate:.6f}",
                            repr(float(ax)), repr(float(ay)), repr(float(az))])


def read_dataset_csv(path) -> list[ImuTrace]:
    groups: dict[tuple[int, int, int], list] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["subject", "class", "rep", "t", "ax", "ay", "az"]:
            raise DataFormatError(f"{path}: line 1: unexpected header")
        for lineno, f in enumerate(reader, start=2):
            try:
                key = (int(f[0]), int(f[1]), int(f[2]))
                groups.setdefault(key, []).append([float(x) for x in f[3:7]])
            except (ValueError, IndexError) as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    traces = []
    for (subject, label, rep), rows in groups.items():
        arr = np.array(rows)
        if len(arr) < 2:
            raise DataFormatError(f"{path}: trace {subject}/{label}/{rep} has fewer than 2 samples")
        rate = 1.0 / float(np.median(np.diff(arr[:, 0])))
        traces.append(ImuTrace(arr[:, 1:], round(rate, 6), label, subject, rep))
    return traces


def write_model_json(model: GaussianModel, path, extra: dict | None = None) -> None:
    d = model.to_dict()
    if extra:
        d.update(extra)
    dump_json(d, path)


def read_model_json(path) -> tuple[GaussianModel, dict]:
    try:
        d = json.loads(Path(path).read_text())
        return GaussianModel.from_dict(d), d
    except (OSError, ValueError, KeyError) as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from exc


def write_trace_csv(trace: InferenceTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "row", "bit"])
        for c in range(trace.cycles_run):
            for r in range(trace.n_rows):
                w.writerow([c + 1, r, int(trace.bits[r, c])])
