# tests/test_sources.py
from src.grid_fields import make_grid
from src.run_sources import available_tags, get_source, load_source_modules


def test_presets_are_discovered():
    tags = available_tags()
    assert "F1" in tags and "F2" in tags
    for _, mod in load_source_modules():
        assert mod.DESCRIPTION


def test_lookup_is_case_insensitive():
    assert get_source("f2") is get_source("F2")
    assert get_source("F9") is None


def test_generated_sources():
    g = make_grid(5, 10)
    f1 = get_source("F1").generate_source(g, 1e-10)
    f2 = get_source("F2").generate_source(g)
    assert f1.as_array()[4, 4] == -1.0
    # node (2, -1) is row 3 (y = -1), column 6 (x = 2)
    assert f2.as_array()[3, 6] == -10.0
    assert f2.as_array()[4, 4] == 0.0
