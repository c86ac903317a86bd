import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import aero, doc, gas, modal, particles, phase
from mpkin import EnvironmentalState, build_layout, parse_config
from mpkin.layout import deserialize_state, serialize_state


def _layout(rep):
    return build_layout(parse_config(doc(
        gas("B"), gas("A"), aero("x"), aero("y"), phase("p", ["x", "y"]), phase("q", ["y"]),
        rep)))


def test_gas_first_then_slots_in_order():
    lay = _layout(modal(("m1", 1e-7, 1.5, ["p", "q"]), ("m2", 1e-6, 1.5, ["q"])))
    assert lay.n_gas == 2
    assert lay.n_total == 2 + 3 + 1
    offsets = [lay.index_of(None, None, g) for g in lay.gas_species]
    assert offsets == [0, 1]
    assert lay.index_of("m1", "p", "x") < lay.index_of("m1", "q", "y") < lay.index_of("m2", "q", "y")
    assert lay.instances_of("q") == [1, 2]


def test_index_and_label_are_inverse():
    lay = _layout(particles(12, ["p"]))
    assert lay.slot_names[0] == "particle00" and lay.slot_names[-1] == "particle11"
    for off in range(lay.n_total):
        label = lay.label_of(off)
        kind, *rest = label.split(":")
        if kind == "gas":
            assert lay.index_of(None, None, rest[0]) == off
        else:
            assert lay.index_of(kind, rest[0], rest[1]) == off


def test_lookup_errors():
    lay = _layout(modal(("m1", 1e-7, 1.5, ["p"])))
    with pytest.raises(KeyError):
        lay.index_of(None, None, "Z")
    with pytest.raises(KeyError):
        lay.index_of("m9", "p", "x")
    with pytest.raises(KeyError):
        lay.index_of("m1", "q", "y")
    with pytest.raises(KeyError):
        lay.index_of("m1", None, "x")


def test_environment_validation():
    with pytest.raises(ValueError):
        EnvironmentalState(0.0, 1e5)
    with pytest.raises(ValueError):
        EnvironmentalState(290.0, -1.0)
    with pytest.raises(ValueError):
        EnvironmentalState(290.0, 1e5, 1.5)


def test_snapshot_header_and_errors():
    env = EnvironmentalState(280.0, 9e4)
    buf = serialize_state(np.arange(3.0), env)
    magic, version, n = struct.unpack_from("<4sIQ", buf)
    assert (version, n, len(buf)) == (1, 3, 16 + 24 + 24)
    y, env2 = deserialize_state(buf)
    assert env2 == env and env2.relative_humidity is None
    with pytest.raises(ValueError, match="magic"):
        deserialize_state(b"XXXX" + buf[4:])
    with pytest.raises(ValueError, match="version"):
        deserialize_state(buf[:4] + struct.pack("<I", 99) + buf[8:])
    with pytest.raises(ValueError, match="length"):
        deserialize_state(buf[:-1])
    with pytest.raises(ValueError):
        deserialize_state(buf[:10])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(0, 40)),
       st.floats(150, 350), st.floats(1e3, 2e5),
       st.one_of(st.none(), st.floats(0, 1)))
def test_snapshot_round_trip_is_bitwise(y, t, p, rh):
    env = EnvironmentalState(t, p, rh)
    y2, env2 = deserialize_state(serialize_state(y, env))
    assert y2.tobytes() == y.tobytes()
    assert env2 == env or (math.isnan(t) and math.isnan(env2.temperature))
