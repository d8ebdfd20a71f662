"""JSON round-trips for forms, fields, and endomorphisms."""

import json

import numpy as np
import pytest

from calorbits.exalg import Form, MultiForm
from calorbits.serialize import (endo_from_json, endo_to_json,
                                 endofield_from_json, endofield_to_json,
                                 form_from_json, form_to_json,
                                 multiform_from_json, multiform_to_json,
                                 trigform_from_json, trigform_to_json)
from calorbits.verify import random_endofield, random_trigform


def test_multiform_roundtrip():
    rng = np.random.default_rng(0)
    mf = MultiForm([
        Form(4, 2, {(1, 2): complex(rng.standard_normal()),
                    (3, 4): complex(rng.standard_normal())}),
        Form(4, 3, {(1, 2, 3): complex(rng.standard_normal())})])
    data = multiform_to_json(mf)
    json.dumps(data)  # payload must be plain JSON
    back = multiform_from_json(data)
    assert (back - mf.to_float()).norm() < 1e-14


def test_form_roundtrip():
    f = Form(3, 1, {(1,): 2.0, (3,): -0.5})
    back = form_from_json(form_to_json(f))
    assert (back - f.to_float()).norm() < 1e-14


def test_endo_roundtrip():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((5, 5))
    back = endo_from_json(endo_to_json(M))
    assert np.linalg.norm(back - M) < 1e-14


def test_trigform_roundtrip():
    rng = np.random.default_rng(2)
    alpha = random_trigform(rng, 4, 2, 2)
    data = trigform_to_json(alpha)
    json.dumps(data)
    back = trigform_from_json(data)
    assert (back - alpha).norm() < 1e-12


def test_endofield_roundtrip():
    rng = np.random.default_rng(3)
    a = random_endofield(rng, 4, 2)
    data = endofield_to_json(a)
    json.dumps(data)
    back = endofield_from_json(data)
    assert (back - a).norm() < 1e-12


def test_endofield_reality_enforced_on_load():
    rng = np.random.default_rng(4)
    a = random_endofield(rng, 3, 1)
    data = endofield_to_json(a)
    # strip the conjugate partners so the field is no longer real
    kept = [m for m in data["modes"]
            if any(x > 0 for x in m["freq"] if x) or all(
                x == 0 for x in m["freq"])]
    dropped = {"torus_dim": data["torus_dim"],
               "modes": [m for m in kept
                         if any(x != 0 for x in m["freq"])][:1]}
    if not dropped["modes"]:
        pytest.skip("no oscillating mode generated")
    with pytest.raises(ValueError):
        endofield_from_json(dropped)


def test_trigform_reality_enforced_on_load():
    rng = np.random.default_rng(5)
    alpha = random_trigform(rng, 3, 1, 1)
    data = trigform_to_json(alpha)
    osc = [m for m in data["modes"] if any(x != 0 for x in m["freq"])]
    if not osc:
        pytest.skip("no oscillating mode generated")
    bad = {"torus_dim": data["torus_dim"], "degrees": data["degrees"],
           "modes": osc[:1]}
    with pytest.raises(ValueError):
        trigform_from_json(bad)


def test_reality_check_can_be_disabled():
    data = {"torus_dim": 2, "modes": [
        {"freq": [1, 0], "matrix": [[{"re": 1.0, "im": 0.5},
                                     {"re": 0.0, "im": 0.0}],
                                    [{"re": 0.0, "im": 0.0},
                                     {"re": 1.0, "im": 0.0}]]}]}
    a = endofield_from_json(data, require_real=False)
    assert a.dim == 2
