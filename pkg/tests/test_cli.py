import io
import json
from contextlib import redirect_stdout
from pathlib import Path

from evimech.cli import main

DATA = Path(__file__).parent / "data"


def run_cli(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(list(argv))
    return code, buf.getvalue()


def machine(*argv):
    code, out = run_cli(*argv, "--format", "machine")
    return code, json.loads(out)


def test_validate_leading_ok():
    code, report = machine("validate", str(DATA / "leading.json"))
    assert code == 0
    assert report["payload"]["valid"] is True


def test_validate_broken_sum_exit_2():
    code, report = machine("validate", str(DATA / "broken_sum.json"))
    assert code == 2
    messages = [v["message"] for v in report["payload"]["violations"]]
    assert any("sum" in m for m in messages)


def test_validate_missing_file_exit_1():
    code, report = machine("validate", str(DATA / "does_not_exist.json"))
    assert code == 1


def test_validate_malformed_json_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _ = machine("validate", str(bad))
    assert code == 1


def test_check_npd_leading_fails_with_certificate():
    code, report = machine("check", "npd", str(DATA / "leading.json"))
    assert code == 3
    verdict = report["payload"]["verdict"]
    assert verdict["passed"] is False
    failure = verdict["failures"][0]
    assert (failure["source_state"], failure["target_state"]) == ("H", "M")
    induced = failure["certificates"]["A"]["induced"]
    assert induced == {"{lmh}": "3/5", "{lmh,mh}": "2/5"}


def test_check_nppd_leading_passes():
    code, report = machine("check", "nppd", str(DATA / "leading.json"))
    assert code == 0


def test_check_sm_leading_passes():
    code, _ = machine("check", "sm", str(DATA / "leading.json"))
    assert code == 0


def test_check_npd_perturbed_passes_with_pair_analysis():
    code, report = machine("check", "npd", str(DATA / "perturbed.json"))
    assert code == 0
    analysis = {(row["source_state"], row["target_state"]): row for row in report["payload"]["pair_analysis"]}
    toward_h = analysis[("M", "H")]
    assert toward_h["lie"] == "nonrefutable"
    # the h-collection demand (1/10) and half the top demand are unreachable
    assert toward_h["agents_without_deception"][0]["max_flow"] == "4/5"
    toward_m = analysis[("H", "M")]
    assert toward_m["lie"] == "refutable"
    assert toward_m["witness_mass"]["A"] == "1/10"


def test_check_nppd_pure_deception_fails_on_h_u():
    code, report = machine("check", "nppd", str(DATA / "pure_deception.json"))
    assert code == 3
    failure = report["payload"]["verdict"]["failures"][0]
    assert (failure["source_state"], failure["target_state"]) == ("H", "U")
    assert failure["certificates"]["A"]["kind"] == "pure"


def test_check_hom_and_eic_on_scenario_embedding():
    code, report = machine("check", "hom", str(DATA / "leading.json"))
    assert code == 0
    assert report["payload"]["k_bar"] == 2
    code, _ = machine("check", "eic", str(DATA / "micro.json"))
    assert code == 0


def test_build_bne_perturbed():
    code, report = machine("build", "bne", str(DATA / "perturbed.json"))
    assert code == 0
    scaling = report["payload"]["mechanism"]["scaling"]
    assert scaling["tau_low"] == "17/1"
    assert scaling["tau_high"] == "279/1"
    assert all(not s.startswith("-") for s in scaling["slack"].values())


def test_build_bne_leading_refused():
    code, report = machine("build", "bne", str(DATA / "leading.json"))
    assert code == 3
    assert report["payload"]["refused"] == "npd"


def test_build_pure_leading():
    code, report = machine("build", "pure", str(DATA / "leading.json"))
    assert code == 0
    assert report["payload"]["mechanism"]["identifier_count"] == 839808


def test_build_am_micro_model():
    code, report = machine("build", "am", str(DATA / "micro_model.json"), "--eps", "1/100")
    assert code == 0
    mech = report["payload"]["mechanism"]
    assert mech["rounds"] == 1601
    assert not mech["chain_slack"]["fine_over_stake"].startswith("-")


def test_audit_claims_perturbed():
    code, report = machine("audit", "claims", str(DATA / "perturbed.json"))
    assert code == 0
    assert report["payload"]["passed"] is True


def test_audit_closure_leading_certifies():
    code, report = machine("audit", "closure", str(DATA / "leading.json"))
    assert code == 0
    replay = report["payload"]["replays"][0]
    assert replay["certified"] is True
    assert replay["on_path_outcomes"] == {"grant_b": "1/1"}


def test_audit_search_micro():
    code, report = machine("audit", "search", str(DATA / "micro.json"), "--budget-pure", "100000")
    assert code == 0
    assert report["payload"]["clean"] is True


def test_audit_icr_micro_model():
    code, report = machine("audit", "icr", str(DATA / "micro_model.json"), "--eps", "1/100")
    assert code == 0
    assert report["payload"]["passed"] is True
    assert report["payload"]["stamp"].startswith("EXHAUSTIVE")


def test_hierarchy_dump():
    code, report = machine("hierarchy", str(DATA / "leading.json"), "--depth", "2")
    assert code == 0
    types = report["payload"]["types"]
    assert any(key.startswith("A:") for key in types)
    assert all(len(levels) == 3 for levels in types.values())


def test_reports_are_byte_identical():
    first = run_cli("check", "npd", str(DATA / "leading.json"), "--format", "machine")
    second = run_cli("check", "npd", str(DATA / "leading.json"), "--format", "machine")
    assert first == second
    human_one = run_cli("audit", "claims", str(DATA / "perturbed.json"))
    human_two = run_cli("audit", "claims", str(DATA / "perturbed.json"))
    assert human_one == human_two


def test_exit_codes_total():
    # every command path ends in {0,1,2,3}
    runs = [
        machine("validate", str(DATA / "leading.json"))[0],
        machine("validate", str(DATA / "broken_sum.json"))[0],
        machine("validate", str(DATA / "missing.json"))[0],
        machine("check", "npd", str(DATA / "leading.json"))[0],
    ]
    assert set(runs) <= {0, 1, 2, 3}
