from __future__ import annotations

import json
import os

import pytest

from kplump import fixtures as fx
from kplump import identity_suite as ids
from kplump.bilinear import verify_third_order_identity
from kplump.numfield import make_context

CTX = make_context(1, 5)


@pytest.fixture(scope="module")
def baseline():
    rep = ids.run_suite("all")
    return {r.case_id: (r.status, r.witness, r.note) for r in rep.results}


def test_ids_unique_and_referenced():
    cases = ids.build_cases("all")
    assert len({c.id for c in cases}) == len(cases)
    assert all(c.ref and c.description for c in cases)
    assert all(c.context_needed == (c.context is not None) for c in cases)


def test_unknown_filter():
    with pytest.raises(ValueError):
        ids.build_cases("nope")


def test_lump_suite_passes():
    rep = ids.run_suite("lump")
    assert rep.ok
    assert rep.counts["pass"] >= 20


def test_props_suite_passes():
    rep = ids.run_suite("props", ((1, 5),))
    assert rep.ok
    assert rep.counts["fail"] == 0


@pytest.mark.parametrize("which", ["p1", "P4"])
def test_third_order_lump(which):
    assert verify_third_order_identity(which).cleared()[0].is_zero()


@pytest.mark.parametrize("which", ["inh_case", "P5"])
def test_third_order_periodic(which):
    assert verify_third_order_identity(which, CTX).cleared()[0].is_zero()


def test_report_json_shape():
    rep = ids.run_suite("lump")
    data = json.loads(rep.dumps())
    assert data["schema_version"] == 1 and data["kind"] == "identity_suite"
    assert [c["case_id"] for c in data["cases"]] == sorted(c["case_id"] for c in data["cases"])
    assert {"case_id", "status", "ref"} <= set(data["cases"][0])


def test_suite_deterministic():
    a = ids.run_suite("lump", seed=3).to_json()
    b = ids.run_suite("lump", seed=3).to_json()
    strip = lambda d: [(c["case_id"], c["status"], c.get("witness")) for c in d["cases"]]  # noqa: E731
    assert strip(a) == strip(b)


def test_parallel_matches_serial(baseline):
    rep = ids.run_suite("all", jobs=2)
    assert {r.case_id: (r.status, r.witness, r.note) for r in rep.results} == baseline


def test_corrupted_b2_fails():
    from kplump.bilinear import lump_taus, travelling, verify_backlund

    t0, t1, t2 = (travelling(t) for t in lump_taus())
    res = verify_backlund("b2", pair=(t1, t2 + 1))
    assert any(not r.is_zero() for r in res)
    w = ids.witness_of(next(r for r in res if not r.is_zero()))
    assert w is not None


def test_group_helpers():
    assert ids.check_FJ_relations().ok
    assert ids.check_kernel_elements().ok
    theta = ids.check_theta_values()
    assert all(r.status in ("pass", "erratum") for r in theta.results)


def test_kernel_element_x2_is_not_in_kernel():
    assert ids.chk_eta_kernel("p1", "tau1").status == "pass"
    assert ids.chk_eta_kernel("P4", "x**2").status == "fail"


def test_known_failures_are_stable(baseline):
    """The stated table and reverse-system displays disagree with recomputation in every context."""
    fails = sorted(k for k, v in baseline.items() if v[0] == "fail")
    assert all(f.startswith(("th:", "ng:")) for f in fails)
    assert {f.split("@")[1] for f in fails if f.startswith("ng:")} == {"1,5", "1,12", "2,11"}


# -- fixtures and mutation ---------------------------------------------------


def test_display_roundtrip():
    for did, text in fx.all_display_strings():
        assert fx.display(did) == text


def test_mutated_restores():
    did, text = fx.all_display_strings()[0]
    with fx.mutated(did):
        assert fx.display(did) != text
    assert fx.display(did) == text


def test_corrupt_changes_one_token():
    assert fx.corrupt("x**2 + 3") == "x**3 + 3"
    assert fx.corrupt("x") == "y"
    assert fx.corrupt("tau1*z") == "tau1b*z"


def test_resolve_mutation():
    first = fx.all_display_strings()[0][0]
    assert ids.resolve_mutation(1) == first
    assert ids.resolve_mutation("1") == first
    assert ids.resolve_mutation(first) == first
    with pytest.raises(ValueError):
        ids.resolve_mutation(0)
    with pytest.raises(ValueError):
        ids.resolve_mutation("fn:nonexistent")


ALL_DISPLAYS = [d for d, _ in fx.all_display_strings()]
# a fixed spread of displays by default; KPLUMP_FULL_MUTATION=1 sweeps all of them
SELECTED = ALL_DISPLAYS if os.environ.get("KPLUMP_FULL_MUTATION") else ALL_DISPLAYS[::7]


@pytest.mark.parametrize("display_id", SELECTED)
def test_mutation_is_detected(display_id, baseline):
    rep = ids.run_suite("all", mutate=display_id)
    changed = [r.case_id for r in rep.results if (r.status, r.witness, r.note) != baseline[r.case_id]]
    assert changed, f"corrupting {display_id} went unnoticed"
