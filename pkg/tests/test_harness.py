import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nmx.dist import ExplicitDist, FlatSource, JointDist, stat_dist_exact
from nmx.errors import BudgetExceeded, FixedPointAdversary
from nmx.harness import (
    AdversaryFamily,
    AuditConfig,
    Construction,
    ExperimentConfig,
    ProtocolSuiteConfig,
    SourceFamily,
    comparison_table,
    existence_bound_check,
    gen_adversaries,
    mac_check,
    run_nm_sweep,
    run_preimage_audits,
    run_protocol_suite,
    weak_seed_check,
)
from nmx.harness.adversaries import make_adversary
from nmx.harness.report import dumps, to_csv
from nmx.harness.sweeps import OutputMatrix, cell_error, pair_errors, worst_case_single


# adversary families

def test_offset_count():
    assert len(list(gen_adversaries(AdversaryFamily("offset"), 3))) == 7


def test_all_functions_on_three_values():
    fns = list(gen_adversaries(AdversaryFamily("all_functions"), 2, domain=[0, 1, 2]))
    assert len(fns) == (3 - 1) ** 3 == 8
    assert len({f.as_tuple([0, 1, 2]) for f in fns}) == 8


def test_counterexample_flips_first_bit():
    (f,) = gen_adversaries(AdversaryFamily("flip_first_bit"), 4)
    assert all(f(y) == y ^ 8 for y in range(16))


def test_affine_patched():
    fns = list(gen_adversaries(AdversaryFamily("affine_patched"), 3))
    assert len(fns) == 63
    # z -> 2z + 0 fixes 0 only; the patch sends 0 to 1
    f = next(f for f in fns if f.name == "affine:2:0")
    assert f(0) == 1


@pytest.mark.parametrize("kind", ["all_functions", "affine_patched", "offset", "random_sample", "flip_first_bit"])
def test_families_are_fixed_point_free(kind):
    fam = AdversaryFamily(kind, count=20, seed=1) if kind == "random_sample" else AdversaryFamily(kind)
    bits = 2 if kind == "all_functions" else 4
    for f in gen_adversaries(fam, bits):
        assert all(f(y) != y for y in f.table)


def test_family_limits():
    with pytest.raises(BudgetExceeded):
        list(gen_adversaries(AdversaryFamily("all_functions"), 4))
    with pytest.raises(BudgetExceeded):
        next(gen_adversaries(AdversaryFamily("offset"), 21))
    with pytest.raises(ValueError):
        AdversaryFamily("everything")
    with pytest.raises(FixedPointAdversary):
        make_adversary("bad", {0: 0})


# sweeps

def test_raw_ip_counterexample_sweep():
    cfg = ExperimentConfig(Construction("raw_ip", {"n": 8}), (SourceFamily("counterexample"),),
                           AdversaryFamily("flip_first_bit"))
    rep = run_nm_sweep(cfg)
    assert rep["max_error"] == "1/2"


def test_half_high_entropy_offset():
    cfg = ExperimentConfig(Construction("half", {"n": 8}), (SourceFamily("block", k=7),), AdversaryFamily("offset"))
    rep = run_nm_sweep(cfg)
    assert Fraction(rep["max_error"]) < Fraction(1, 2)
    assert Fraction(rep["max_error"]) <= 0  # frozen value from the exhaustive oracle
    assert rep["header"]["label"] == "family-max"


def test_empty_family_is_strong_extractor_error():
    cfg = ExperimentConfig(Construction("half", {"n": 6}), (SourceFamily("block", k=4),), None)
    rep = run_nm_sweep(cfg)
    ext = cfg.construction.build()
    worst = Fraction(0)
    for _, xs in SourceFamily("block", k=4).generate(6):
        # (Ext(X, Y), Y) against (U, Y), built directly
        real, ideal = {}, {}
        for y in ext.seeds:
            for x in xs:
                key = (ext.fn(x, y), y)
                real[key] = real.get(key, 0) + Fraction(1, len(xs) * len(ext.seeds))
            for b in (0, 1):
                ideal[(b, y)] = Fraction(1, 2 * len(ext.seeds))
        d = stat_dist_exact(JointDist((1, 2), real), JointDist((1, 2), ideal))
        worst = max(worst, d)
    assert Fraction(rep["max_error"]) == worst


def test_worst_case_pairwise_equals_enumeration():
    # seed space of 4 values: 81 functions, small enough to enumerate
    ext = Construction("half", {"n": 6}).build()
    xs = list(range(16, 48))
    value, arg = worst_case_single(ext, xs)
    brute = max(cell_error(ext, xs, [f]) for f in gen_adversaries(AdversaryFamily("all_functions"), 2, ext.seeds))
    assert value == brute
    assert cell_error(ext, xs, [arg]) == value


def test_output_matrix_matches_joint():
    ext = Construction("half", {"n": 8}).build()
    xs = list(range(64, 128))
    mat = OutputMatrix(ext, xs)
    for f in gen_adversaries(AdversaryFamily("random_sample", 10, 2), 3):
        assert mat.error(f) == cell_error(ext, xs, [f])
    table = pair_errors(ext, xs)
    assert len(table) == 8 * 7


def test_all_functions_sweep_labelled_worst_case():
    cfg = ExperimentConfig(Construction("half", {"n": 8}), (SourceFamily("block", k=6),), AdversaryFamily("all_functions"))
    rep = run_nm_sweep(cfg)
    assert rep["header"]["label"] == "worst-case"
    assert rep["max_error"] == "1/8"


def test_monte_carlo_agrees_with_exhaustive():
    base = dict(construction=Construction("half", {"n": 8}), sources=(SourceFamily("block", k=6),),
                adversaries=AdversaryFamily("offset"))
    ex = run_nm_sweep(ExperimentConfig(**base))
    mc = run_nm_sweep(ExperimentConfig(**base, mode="monte_carlo", trials=4000, seed=9))
    exact = {(c["source"], c["adversary"]): c["error_float"] for c in ex["cells"]}
    for c in mc["cells"]:
        lo, hi = c["wilson"]
        assert lo <= exact[c["source"], c["adversary"]] <= hi


def test_sweep_reports_are_byte_identical():
    cfg = ExperimentConfig(Construction("half", {"n": 8}),
                           (SourceFamily("flat_random", k=6, count=5, seed=4),), AdversaryFamily("offset"))
    assert dumps(run_nm_sweep(cfg)) == dumps(run_nm_sweep(cfg))


def test_budget_refusal():
    cfg = ExperimentConfig(Construction("raw_ip", {"n": 8}), (SourceFamily("cube"),), AdversaryFamily("offset"), budget=1000)
    with pytest.raises(BudgetExceeded):
        run_nm_sweep(cfg)
    with pytest.raises(ValueError):
        ExperimentConfig(Construction("raw_ip", {"n": 8}), mode="monte_carlo")


def test_config_from_dict_roundtrip():
    d = {"construction": {"name": "half", "n": 8}, "sources": [{"kind": "block", "k": 6}],
         "adversaries": {"kind": "offset"}, "mode": "exhaustive"}
    cfg = ExperimentConfig.from_dict(d)
    again = ExperimentConfig.from_dict(cfg.to_json())
    assert again.to_json() == cfg.to_json()


def test_source_families():
    assert len(SourceFamily("block", k=6).generate(8)) == 4
    (lab, sup), = SourceFamily("counterexample").generate(8)
    assert sup == list(range(128))
    flats = SourceFamily("flat_random", k=3, count=4, seed=2).generate(6)
    assert all(len(s) == 8 for _, s in flats)
    # domains without zero drop it from the support
    (_, sup), = SourceFamily("cube").generate(3, domain=list(range(1, 8)))
    assert sup == list(range(1, 8))


# audits, checks, protocol suite

def test_preimage_audit_driver():
    rep = run_preimage_audits(AuditConfig(claims=("independence", "sum", "linear", "fp"), ell=3, p=5))
    assert rep["ok"] and len(rep["audits"]) == 4
    rep = run_preimage_audits(AuditConfig(claims=("linear-sampled",), ell=5, samples=20000))
    assert rep["ok"]


def test_weak_seed_small():
    rep = weak_seed_check(Construction("half", {"n": 8}), k=6, samples=60, seed=1, cross_check_every=10)
    assert rep.ok and rep.samples == 60 and rep.cross_checked == 6


def test_mac_check_small():
    rep = mac_check(v=2, ds=(2, 4))
    assert rep.ok
    assert rep.patterns == 2 * (sum(math.comb(4, i) for i in range(3)) - 1)


def test_protocol_suite_small():
    rep = run_protocol_suite(ProtocolSuiteConfig("small", ("passive", "flip-t"), trials=30, seed=2))
    assert rep["ok"]
    assert [r["strategy"] for r in rep["strategies"]] == ["passive", "flip-t"]
    with pytest.raises(ValueError):
        run_protocol_suite(ProtocolSuiteConfig("small", ("nobody",), trials=1))


def test_protocol_suite_micro_extraction():
    rep = run_protocol_suite(ProtocolSuiteConfig("micro", ("passive",), trials=20, micro_ks=(4, 6), exhaustive_k=2))
    assert rep["extraction"]["strictly_decreasing"]
    assert rep["exhaustive_passive"]["trials"] == 4 * 2048
    assert rep["ok"]


# bounds

def test_bounds_boundary_plus_one():
    n, k, eps, c1 = 1024, 1000, 2**-4, 10
    need = 1.5 * math.log2(n - k) + 3 * math.log2(1 / eps) + c1
    d = math.ceil(need) + 1
    chk = existence_bound_check(n, k, d, 1, eps, c1=c1)
    assert chk.feasible
    assert 1 <= chk.seed_margin < 2


def test_bounds_entropy_too_low():
    chk = existence_bound_check(1024, 30, 40, 8, 2**-4)
    assert not chk.feasible and chk.entropy_margin < 0


def test_bounds_input_validation():
    with pytest.raises(ValueError):
        existence_bound_check(10, 5, 0, 1, 0.1)
    with pytest.raises(ValueError):
        existence_bound_check(10, 5, 4, 1, 1.5)


@settings(max_examples=50)
@given(st.integers(2, 10_000), st.integers(1, 60), st.integers(1, 8))
def test_bounds_monotone_in_seed_length(n, d, m):
    k = n // 2 + 1
    a = existence_bound_check(n, k, d, m, 0.01)
    b = existence_bound_check(n, k, d + 1, m, 0.01)
    assert b.seed_margin == pytest.approx(a.seed_margin + 1)


def test_comparison_table():
    rows = comparison_table(1024, 512)
    assert len(rows) == 4
    # both bounds grow with log(1/eps); ours with slope 3, the single-tamper one with slope 2
    assert rows[-1]["seed_bound"] - rows[0]["seed_bound"] == pytest.approx(3 * 28)
    assert rows[-1]["single_tamper_bound"] - rows[0]["single_tamper_bound"] == pytest.approx(2 * 28)


def test_csv_output():
    text = to_csv([{"a": 1, "b": [1, 2]}, {"a": 2, "c": "x"}])
    assert text.splitlines() == ["a,b,c", '1,"[1, 2]",', "2,,x"]
