import math

import pytest

from thinshell import config as C
from thinshell.checks import Record
from thinshell.report import record_dict, records_csv


def test_shorthands():
    assert C.surface_shorthand("ellipsoid:a=1,b=1.3,c=2") == {"name": "ellipsoid", "params": {"a": 1.0, "b": 1.3, "c": 2.0}}
    assert C.surface_shorthand("graph:f=u1*u2")["params"] == {"f": "u1*u2"}
    assert C.field_shorthand("random:count=4,seed=9") == {"random": {"count": 4, "seed": 9}}
    assert C.field_shorthand("u2; -u1") == {"components": ["u2", "-u1"]}
    assert C.points_shorthand("0.1,0.2;0.3,0.4") == {"points": [[0.1, 0.2], [0.3, 0.4]]}
    assert C.points_shorthand("sobol:count=7") == {"sobol": {"count": 7, "seed": 0}}


def test_load_defaults():
    cfg = C.load({})
    assert len(cfg.charts) == 1 and len(cfg.fields[0]) == 3 and len(cfg.points[0]) == 5
    assert [str(p) for p in cfg.profiles] == ["slip", "hodge", "alpha:0.5"]
    assert cfg.tolerances == C.DEFAULT_TOLERANCES


def test_sample_points_respect_margin():
    cfg = C.load({"surfaces": [{"name": "torus"}], "samples": {"sobol": {"count": 32, "seed": 3}, "margin": 0.1}})
    lo, hi = 0.1 * 2 * math.pi, 0.9 * 2 * math.pi
    assert all(lo <= x <= hi for p in cfg.points[0] for x in p)


def test_hash_is_stable():
    assert C.config_hash({"a": 1, "b": 2}) == C.config_hash({"b": 2, "a": 1})


@pytest.mark.parametrize(
    "doc, pointer",
    [
        ({"nonsense": 1}, "/nonsense"),
        ({"surfaces": [{"name": "sphere"}, {"params": {}}]}, "/surfaces/1"),
        ({"profiles": ["slip", "alpha:x"]}, "/profiles/1"),
        ({"fields": [{"components": ["sin(", "u1"]}]}, "/fields/0/components"),
        ({"fields": [{}]}, "/fields/0"),
        ({"tolerances": {"gauss": "tight"}}, "/tolerances/gauss"),
        ({"tolerances": {"gauss": float("inf")}}, "/tolerances/gauss"),
        ({"samples": {"sobol": {"count": 0}}}, "/samples/sobol/count"),
    ],
)
def test_config_errors_carry_pointer(doc, pointer):
    with pytest.raises(C.ConfigError) as info:
        C.load(doc)
    assert info.value.pointer == pointer


def test_report_serialises_special_values():
    rec = Record("metric_expansion", "sphere", "-", "-", (0.5, 1.0), 0.0, 2.8, True, None, math.inf)
    d = record_dict(rec)
    assert d["order"] == "inf" and d["alpha"] is None
    bad = Record("gauss", "x", "-", "-", (0.5, 1.0), math.nan, 1e-8, False, error="DegenerateImmersion: rank")
    assert record_dict(bad)["residual"] is None and record_dict(bad)["error"].startswith("Degenerate")
    lines = records_csv([rec, bad]).splitlines()
    assert lines[1].startswith("metric_expansion,sphere,-,-,,0.5,1.0,0.0,2.8,true,inf")
