import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vvfractal.geometry import AffineMap, ColorPart, similitude_ratio
from vvfractal.ifs_model import (
    ConfigSemanticError,
    ConfigSyntaxError,
    Ifs,
    SuperIfs,
    parse_config,
    preset,
    serialize_config,
    validate,
)


def test_every_preset_validates(any_preset):
    name, s = any_preset
    assert validate(s) == []


def test_up_down_printed_coefficients():
    u, d = preset("up-down").ifss
    f1, f2 = u.maps
    assert f1.translation == (-1 / 16, 9 / 16)
    assert f1.linear == ((0.5, 0.375), (0.5, -0.375))
    assert f2.translation == (9 / 16, 17 / 16)
    assert f2.linear == ((0.5, -0.375), (-0.5, -0.375))
    g1, g2 = d.maps
    assert g1.translation == (-1 / 16, 7 / 16)
    assert g1.linear == ((0.5, 0.375), (-0.5, 0.375))
    assert g2.translation == (9 / 16, -1 / 16)
    assert g2.linear == ((0.5, -0.375), (0.5, 0.375))
    assert preset("up-down").probabilities == (0.5, 0.5)


def test_sierpinski_pair_defaults():
    s = preset("sierpinski-pair")
    assert s.probabilities == (0.5, 0.5)
    f, g = s.ifss
    for m in f.maps:
        assert similitude_ratio(m, 1e-12) == pytest.approx(0.5, abs=1e-12)
    for m in g.maps:
        assert similitude_ratio(m, 1e-12) == pytest.approx(1 / 3, abs=1e-12)
    # same fixed points for F and G
    for mf, mg in zip(f.maps, g.maps):
        fix_f = (mf.e / (1 - mf.a), mf.f / (1 - mf.d))
        fix_g = (mg.e / (1 - mg.a), mg.f / (1 - mg.d))
        assert fix_f == pytest.approx(fix_g, abs=1e-15)


def test_unknown_preset_lists_available():
    with pytest.raises(KeyError, match="sierpinski-half"):
        preset("koch")


def test_weights_not_summing_to_one():
    s = SuperIfs((Ifs("A", (AffineMap.homothety(0.5, (0, 0)), AffineMap.homothety(0.5, (1, 0))), (0.5, 0.6)),), (1.0,), 1)
    problems = validate(s)
    assert any("weights sum 1.1 ≠ 1" in p for p in problems)


def test_non_contractive_map():
    s = SuperIfs((Ifs.uniform("A", [AffineMap(1.2, 0, 0, 0.5, 0, 0)]),), (1.0,), 1)
    assert any("map not contractive" in p for p in validate(s))


def test_bad_V_and_probabilities():
    s = preset("sierpinski-pair")
    assert any("V must be ≥ 1" in p for p in validate(s.with_V(0)))
    bad = SuperIfs(s.ifss, (0.7, 0.7), 2)
    assert any("probabilities sum" in p for p in validate(bad))


def test_round_trip_presets(any_preset):
    _, s = any_preset
    text = serialize_config(s)
    assert parse_config(text.encode()) == s
    assert serialize_config(parse_config(text)) == text


def test_omitted_weights_are_uniform():
    s = parse_config(
        b"superifs V=2\n"
        b"ifs F prob=1\n"
        b"map a=0.5 b=0 c=0 d=0.5 e=0 f=0\n"
        b"map a=0.5 b=0 c=0 d=0.5 e=0.5 f=0\n"
        b"map a=0.5 b=0 c=0 d=0.5 e=0.25 f=0.5  # trailing comment\n"
    )
    assert s.ifss[0].weights == (1 / 3, 1 / 3, 1 / 3)
    assert s.V == 2


def test_fractions_and_colors():
    s = parse_config(
        "superifs V=1\n"
        "ifs G\n"
        "map a=1/3 b=0 c=0 d=1/3 e=0 f=0 color=0.5,0,0,0,0.5,0,0,0,0.5,0,0.5,0\n"
    )
    m = s.ifss[0].maps[0]
    assert m.a == 1 / 3
    assert m.color == ColorPart.toward((0, 1, 0), 0.5)
    assert s.probabilities == (1.0,)


def test_V_zero_is_semantic_error():
    with pytest.raises(ConfigSemanticError, match="V must be ≥ 1"):
        parse_config("superifs V=0\nifs F\nmap a=0.5 b=0 c=0 d=0.5 e=0 f=0\n")


@pytest.mark.parametrize("text, line, col", [
    ("superifs V=2\nifs F\nmap a=0.5 b=0 c=0 d=0.5 e=0\n", 3, 1),
    ("superifs V=x\n", 1, 12),
    ("superifs V=1\nifs F\nmap a=0.5 b=zz c=0 d=0.5 e=0 f=0\n", 3, 13),
    ("superifs V=1\nbogus\n", 2, 1),
    ("ifs F\n", 1, 1),
    ("superifs V=1\nifs F\nmap a=0.5 b=0 c=0 d=0.5 e=0 f=0 q=1\n", 3, 33),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(ConfigSyntaxError) as info:
        parse_config(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_partial_weights_rejected():
    with pytest.raises(ConfigSyntaxError):
        parse_config("superifs V=1\nifs F\nmap a=0.5 b=0 c=0 d=0.5 e=0 f=0 weight=0.5\nmap a=0.5 b=0 c=0 d=0.5 e=0.5 f=0\n")


coef = st.floats(-0.6, 0.6, allow_nan=False, allow_infinity=False)


@st.composite
def super_ifs(draw):
    n = draw(st.integers(1, 3))
    ifss = []
    for k in range(n):
        m = draw(st.integers(1, 4))
        maps = []
        for _ in range(m):
            a, b, c, d = (draw(st.floats(-0.35, 0.35)) for _ in range(4))
            color = None
            if draw(st.booleans()):
                color = ColorPart.from_flat([draw(coef) for _ in range(12)])
            maps.append(AffineMap(a, b, c, d, draw(coef), draw(coef), color))
        raw = [draw(st.floats(0.1, 1.0)) for _ in range(m)]
        total = math.fsum(raw)
        ifss.append(Ifs(f"F{k}", tuple(maps), tuple(x / total for x in raw)))
    raw = [draw(st.floats(0.1, 1.0)) for _ in range(n)]
    total = math.fsum(raw)
    return SuperIfs(tuple(ifss), tuple(x / total for x in raw), draw(st.integers(1, 8)))


@settings(max_examples=60, deadline=None)
@given(super_ifs())
def test_round_trip_property(s):
    if validate(s):
        return
    assert parse_config(serialize_config(s)) == s
