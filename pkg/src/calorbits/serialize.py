"""JSON (de)serialization for forms, endomorphisms, and torus fields.

Schemas
-------
MultiForm: {"dim": n, "scalar": "real"|"complex",
            "parts": [{"degree": p, "terms": [{"idx": [...], "re": r, "im": s}]}]}
Endo:      {"dim": n, "rows": [[...]]}, row i holding the e_i components
TrigForm:  {"torus_dim": n, "degrees": [...],
            "modes": [{"freq": [...], "coeff": <MultiForm>}]}
EndoField: {"torus_dim": n,
            "modes": [{"freq": [...], "matrix": [[{"re":..,"im":..}]]}]}

Real-valued fields must satisfy coeff(-k) == conj(coeff(k)); this is
validated on load.
"""

from __future__ import annotations

import numpy as np

from .exalg import Form, MultiForm
from .torus import EndoField, TrigForm


def _num(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _load_num(d):
    if isinstance(d, dict):
        return complex(d.get("re", 0.0), d.get("im", 0.0))
    return complex(d)


def multiform_to_json(mf: MultiForm):
    mf = mf.to_float()
    parts = []
    is_real = True
    for part in mf.parts:
        terms = []
        for idx in sorted(part.coeffs):
            z = complex(part.coeffs[idx])
            if z.imag != 0.0:
                is_real = False
            terms.append({"idx": list(idx), "re": z.real, "im": z.imag})
        parts.append({"degree": part.degree, "terms": terms})
    return {"dim": mf.dim, "scalar": "real" if is_real else "complex",
            "parts": parts}


def multiform_from_json(data) -> MultiForm:
    dim = int(data["dim"])
    forms = []
    for part in data["parts"]:
        degree = int(part["degree"])
        coeffs = {}
        for term in part["terms"]:
            idx = tuple(int(i) for i in term["idx"])
            if list(idx) != sorted(set(idx)) or len(idx) != degree:
                raise ValueError(f"bad index tuple {idx} for degree {degree}")
            coeffs[idx] = complex(term.get("re", 0.0), term.get("im", 0.0))
        forms.append(Form(dim, degree, coeffs))
    return MultiForm(forms)


def form_to_json(f: Form):
    return multiform_to_json(MultiForm([f]))


def form_from_json(data) -> Form:
    mf = multiform_from_json(data)
    if len(mf.parts) != 1:
        raise ValueError("expected a single-part payload")
    return mf.parts[0]


def endo_to_json(matrix):
    M = np.asarray(matrix)
    return {"dim": int(M.shape[0]),
            "rows": [[_num(x) for x in row] for row in M]}


def endo_from_json(data) -> np.ndarray:
    rows = [[_load_num(x) for x in row] for row in data["rows"]]
    M = np.array(rows)
    n = int(data["dim"])
    if M.shape != (n, n):
        raise ValueError("endomorphism payload is not square")
    if np.all(M.imag == 0):
        M = M.real
    return M


def trigform_to_json(alpha: TrigForm):
    alpha = alpha.to_float()
    modes = []
    for k in sorted(alpha.modes):
        modes.append({"freq": list(k),
                      "coeff": multiform_to_json(alpha.modes[k])})
    return {"torus_dim": alpha.dim, "degrees": list(alpha.degrees),
            "modes": modes}


def trigform_from_json(data, require_real=True, tol=1e-9) -> TrigForm:
    n = int(data["torus_dim"])
    degrees = tuple(int(p) for p in data["degrees"])
    modes = {}
    for rec in data["modes"]:
        k = tuple(int(x) for x in rec["freq"])
        modes[k] = multiform_from_json(rec["coeff"])
    out = TrigForm(n, degrees, modes)
    if require_real and not out.is_real(tol):
        raise ValueError("field violates the reality constraint")
    return out


def endofield_to_json(a: EndoField):
    modes = []
    for k in sorted(a.modes):
        fiber = a.modes[k]
        modes.append({"freq": list(k),
                      "matrix": [[_num(x) for x in row] for row in fiber]})
    return {"torus_dim": a.dim, "modes": modes}


def endofield_from_json(data, require_real=True, tol=1e-9) -> EndoField:
    n = int(data["torus_dim"])
    modes = {}
    for rec in data["modes"]:
        k = tuple(int(x) for x in rec["freq"])
        M = [[_load_num(x) for x in row] for row in rec["matrix"]]
        if len(M) != n or any(len(r) != n for r in M):
            raise ValueError("matrix payload has wrong shape")
        modes[k] = tuple(tuple(row) for row in M)
    out = EndoField(n, modes)
    if require_real and not out.is_real(tol):
        raise ValueError("field violates the reality constraint")
    return out
