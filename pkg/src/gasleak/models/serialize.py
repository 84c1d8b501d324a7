"""Versioned model container.

A model file is a zip archive holding ``meta.json`` (family, hyperparameters,
recipe, metadata and estimator structure) plus one ``.npy`` member per
parameter array. Entry order, timestamps and JSON layout are fixed, so the
same model always serialises to the same bytes.
"""

from __future__ import annotations

import io
import json
import os
import zipfile

import numpy as np

from gasleak import dataio
from gasleak.models.observer import ESTIMATORS, Recipe, RegressorModel

FORMAT = "gasleak-model"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


class ModelFormatError(ValueError):
    pass


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _npy(arr) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.asarray(arr), allow_pickle=False)
    return buf.getvalue()


def _member(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def model_to_bytes(model: RegressorModel) -> bytes:
    est_meta, arrays = model.estimator.get_state()
    arrays = {f"estimator/{k}": v for k, v in arrays.items()}
    recipe = {"input_names": list(model.recipe.input_names),
              "poly_degree": model.recipe.poly_degree,
              "scaled": model.recipe.scaler is not None}
    if model.recipe.scaler is not None:
        for k, v in model.recipe.scaler.to_dict().items():
            arrays[f"scaler/{k}"] = v
    meta = {"format": FORMAT, "version": VERSION, "family": model.family,
            "params": model.params, "recipe": recipe, "metadata": model.metadata,
            "estimator": est_meta}
    text = json.dumps(meta, sort_keys=True, indent=1, default=_default, allow_nan=True)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        _member(zf, "meta.json", text.encode("utf-8"))
        for name in sorted(arrays):
            _member(zf, f"arrays/{name}.npy", _npy(arrays[name]))
    return buf.getvalue()


def model_from_bytes(data: bytes) -> RegressorModel:
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise ModelFormatError("not a model file") from exc
    with zf:
        if "meta.json" not in zf.namelist():
            raise ModelFormatError("model file has no meta.json")
        meta = json.loads(zf.read("meta.json"))
        arrays = {}
        for name in zf.namelist():
            if name.startswith("arrays/") and name.endswith(".npy"):
                key = name[len("arrays/"):-len(".npy")]
                arrays[key] = np.load(io.BytesIO(zf.read(name)), allow_pickle=False)
    if meta.get("format") != FORMAT:
        raise ModelFormatError(f"unexpected format tag {meta.get('format')!r}")
    if meta.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {meta.get('version')!r}")
    family = meta["family"]
    if family not in ESTIMATORS:
        raise ModelFormatError(f"unknown family {family!r}")
    est_arrays = {k[len("estimator/"):]: v for k, v in arrays.items()
                  if k.startswith("estimator/")}
    estimator = ESTIMATORS[family].from_state(meta["estimator"], est_arrays)
    r = meta["recipe"]
    scaler = None
    if r["scaled"]:
        scaler = dataio.Scaler.from_dict({k: arrays[f"scaler/{k}"]
                                          for k in ("minimum", "scale", "constant")})
    recipe = Recipe(tuple(r["input_names"]), r["poly_degree"], scaler)
    return RegressorModel(family, estimator, recipe, meta["params"], meta["metadata"])


def save_model(model: RegressorModel, path: str | os.PathLike) -> None:
    """Write atomically so a failed save never leaves a partial file."""
    data = model_to_bytes(model)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_model(path: str | os.PathLike) -> RegressorModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
