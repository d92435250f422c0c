import json

import numpy as np
import pytest

from fgqmf.catalog import CATALOG, minimal_model
from fgqmf.modelfile import (
    ModelError,
    load_model,
    parse_model,
    serialize_model,
    shipped_model_path,
    shipped_models,
)
from fgqmf.models import fr_model

SHIPPED = shipped_models()


def minimal_doc():
    return json.loads(serialize_model(minimal_model()))


def test_shipped_collection_matches_catalog():
    assert SHIPPED == sorted(f"{n}.model.json" for n in CATALOG)


def test_parse_minimal():
    g = parse_model(json.dumps(minimal_doc()))
    assert g.structurally_equal(minimal_model())
    assert np.array_equal(g.factors["eq"].tensor.data, np.eye(2))


def test_schema_error_has_path():
    doc = minimal_doc()
    doc["variables"][0]["cardinality"] = 0
    with pytest.raises(ModelError) as e:
        parse_model(json.dumps(doc))
    assert e.value.path == "$.variables[0].cardinality"


def test_dangling_reference():
    doc = minimal_doc()
    doc["factors"][0]["axes"] = ["X", "Q"]
    with pytest.raises(ModelError, match="dangling reference to variable 'Q'") as e:
        parse_model(json.dumps(doc))
    assert e.value.path == "$.factors[0]"


def test_gate_shape_mismatch():
    doc = minimal_doc()
    doc["factors"][0]["gate"]["params"]["M"] = 3
    with pytest.raises(ModelError, match="shape"):
        parse_model(json.dumps(doc))


def test_data_size_mismatch():
    doc = minimal_doc()
    doc["factors"][0] = {"id": "q", "axes": ["X", "X'"], "data": [[1, 0]]}
    with pytest.raises(ModelError, match="entries") as e:
        parse_model(json.dumps(doc))
    assert e.value.path == "$.factors[0].data"


def test_bad_json_reports_line():
    text = serialize_model(minimal_model()).replace('"minimal"', '"minimal",,', 1)
    with pytest.raises(ModelError, match=r"line \d+ column \d+"):
        parse_model(text)


def test_unknown_key_rejected():
    doc = minimal_doc()
    doc["extra"] = 1
    with pytest.raises(ModelError, match="Additional properties"):
        parse_model(json.dumps(doc))


@pytest.mark.parametrize("name", SHIPPED)
def test_round_trip_is_bit_exact(name):
    text = shipped_model_path(name).read_text(encoding="utf-8")
    g = parse_model(text)
    assert serialize_model(g) == text
    again = parse_model(serialize_model(g))
    for fid, f in g.factors.items():
        assert f.tensor.data.tobytes() == again.factors[fid].tensor.data.tobytes()


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_regenerates_shipped_text(name):
    assert serialize_model(CATALOG[name]()) == shipped_model_path(name).read_text(encoding="utf-8")


def test_shipped_fr_matches_builder():
    g = load_model(shipped_model_path("fr"))
    assert g.structurally_equal(fr_model().graph)
    assert abs(g.exterior(["Y1b", "Y2b"]).value(Y1b=0, Y2b=1) - 1 / 12) <= 1e-9


def test_missing_shipped_model():
    with pytest.raises(FileNotFoundError):
        shipped_model_path("nope")
