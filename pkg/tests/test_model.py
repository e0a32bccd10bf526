import math

import pytest
from hypothesis import given, strategies as st

from threelevel.errors import DegenerateTransition, ThreePhotonResonance
from threelevel.model import (AtomKind, Severity, SystemParams, default_truncation, derive_params,
                              has_errors, min_truncation, poisson_tail, validate)

from conftest import REFERENCE_ENERGIES, reference_params


def codes(diags):
    return {d.code for d in diags}


def test_lambda_detunings_at_reference_point():
    d = derive_params(reference_params(AtomKind.LAMBDA), AtomKind.LAMBDA)
    assert d.delta_a == pytest.approx(0.2, abs=1e-14)
    assert d.delta_b == pytest.approx(0.28, abs=1e-14)


def test_lambda_eps_from_partial_frequency():
    # E1 - E2 = 1.2 gives partial frequency 1.1
    p = SystemParams(1.2, 0.0, 0.0, 0.04, 0.0)
    d = derive_params(p, AtomKind.LAMBDA)
    assert d.wtilde_a == pytest.approx(1.1)
    assert d.eps1 == pytest.approx(0.04 / 2.2, rel=1e-15)


def test_reference_eps_values():
    d = derive_params(reference_params(AtomKind.LAMBDA), AtomKind.LAMBDA)
    assert d.eps1 == pytest.approx(1 / 220, rel=1e-14)
    assert d.eps2 == pytest.approx(1 / 57, rel=1e-14)


def test_zero_coupling_gives_zero_perturbation(kind):
    d = derive_params(reference_params(kind, g=(0.0, 0.0)), kind)
    assert (d.eps1, d.eps2, d.beta1, d.beta2, d.gamma1, d.gamma2) == (0, 0, 0, 0, 0, 0)


def test_rwa_flag_zeroes_corrections_keeps_detuning(kind):
    p = reference_params(kind)
    full, rwa = derive_params(p, kind), derive_params(p, kind, rwa=True)
    assert rwa.eps == (0.0, 0.0)
    assert (rwa.beta1, rwa.gamma2) == (0.0, 0.0)
    assert (rwa.delta_a, rwa.delta_b, rwa.wtilde_a) == (full.delta_a, full.delta_b, full.wtilde_a)


def test_vee_and_ladder_transition_maps():
    v = derive_params(reference_params(AtomKind.VEE), AtomKind.VEE)
    assert v.delta_a == pytest.approx(0.2) and v.delta_b == pytest.approx(0.28)
    x = derive_params(reference_params(AtomKind.LADDER), AtomKind.LADDER)
    assert x.delta_a == pytest.approx(0.2) and x.delta_b == pytest.approx(0.28)


def test_degenerate_transition_raises():
    # E1 - E2 = -omega_f makes the partial frequency vanish
    with pytest.raises(DegenerateTransition):
        derive_params(SystemParams(0.0, 1.0, -5.0, 0.01, 0.01), AtomKind.LAMBDA)


def test_three_photon_resonance():
    p = SystemParams(3.0, 0.0, -1.0, 0.01, 0.01)
    with pytest.raises(ThreePhotonResonance):
        derive_params(p, AtomKind.LAMBDA)
    derive_params(p, AtomKind.LAMBDA, rwa=True)  # irrelevant without CRTs
    assert "ThreePhotonResonance" in codes(validate(p, AtomKind.LAMBDA))


def test_reference_point_validates_clean(kind):
    p = reference_params(kind, n_max=60, mean_photons=25.0)
    assert validate(p, kind) == []


def test_large_eps_warns():
    p = SystemParams(1.28, 0.08, 0.0, 1.1, 0.04, n_max1=1, n_max2=1)
    diags = validate(p, AtomKind.LAMBDA)
    assert "PerturbationLarge" in codes(diags)
    assert not has_errors(diags)


def test_short_truncation_warns():
    p = SystemParams(1.28, 0.08, 0.0, 0.01, 0.04, alpha1=5, n_max1=20, n_max2=5)
    diags = validate(p, AtomKind.LAMBDA)
    tail = [d for d in diags if d.code == "TruncationTail"]
    assert len(tail) == 1 and tail[0].severity is Severity.WARNING
    assert poisson_tail(25.0, 20) > 1e-3


@pytest.mark.parametrize("field,value,code", [
    ("omega_f", 0.0, "InvalidFrequency"),
    ("g1", -0.1, "NegativeCoupling"),
    ("n_max2", -1, "InvalidTruncation"),
    ("e2", math.nan, "NonFinite"),
])
def test_invalid_inputs_are_errors(field, value, code):
    from dataclasses import replace
    p = replace(reference_params(AtomKind.LAMBDA), **{field: value})
    diags = validate(p, AtomKind.LAMBDA)
    assert code in codes(diags) and has_errors(diags)


def test_nonlinearity_sign_change_is_error():
    # eps2 ~ 0.29 makes f negative well inside n_max = 40
    p = SystemParams(1.28, 0.08, 0.0, 0.01, 0.66, n_max1=40, n_max2=40)
    assert "NonlinearityNonPositive" in codes(validate(p, AtomKind.LAMBDA))


def test_truncation_rules():
    assert min_truncation(5) == 55
    assert default_truncation(5) >= 55
    assert poisson_tail(25.0, default_truncation(5)) <= 1e-9
    assert min_truncation(0) == 0 and default_truncation(0) == 0


def test_poisson_tail_matches_direct_sum():
    direct = 1 - sum(math.exp(-4.0) * 4.0 ** n / math.factorial(n) for n in range(11))
    assert poisson_tail(4.0, 10) == pytest.approx(direct, rel=1e-10)


def test_atom_kind_aliases():
    assert AtomKind.parse("Λ") is AtomKind.LAMBDA
    assert AtomKind.parse("xi") is AtomKind.LADDER
    assert AtomKind.parse(" V ") is AtomKind.VEE
    with pytest.raises(ValueError):
        AtomKind.parse("w")


@given(st.floats(0.1, 10.0), st.sampled_from(list(AtomKind)))
def test_scale_covariance(s, kind):
    p = reference_params(kind)
    q = SystemParams(*(s * e for e in REFERENCE_ENERGIES[kind]), s * p.g1, s * p.g2,
                     omega_f=s, omega_fp=s)
    d, ds = derive_params(p, kind), derive_params(q, kind)
    assert ds.eps1 == pytest.approx(d.eps1, rel=1e-12)
    assert ds.eps2 == pytest.approx(d.eps2, rel=1e-12)
    assert ds.wtilde_a == pytest.approx(s * d.wtilde_a, rel=1e-12)
    assert ds.delta_b == pytest.approx(s * d.delta_b, rel=1e-9, abs=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 5.0))
def test_eps_linear_in_coupling(g1, g2, s):
    p = SystemParams(1.28, 0.08, 0.0, g1, g2)
    q = SystemParams(1.28, 0.08, 0.0, s * g1, s * g2)
    d, ds = derive_params(p, AtomKind.LAMBDA), derive_params(q, AtomKind.LAMBDA)
    assert ds.eps1 == pytest.approx(s * d.eps1, rel=1e-12, abs=1e-300)
    assert ds.eps2 == pytest.approx(s * d.eps2, rel=1e-12, abs=1e-300)


@given(st.floats(0.01, 60.0))
def test_validated_truncation_keeps_input_statistics(mean):
    """Smallest accepted n_max keeps the coherent input's norm and Mandel Q."""
    n_max = default_truncation(math.sqrt(mean))
    p = SystemParams(1.28, 0.08, 0.0, 0.01, 0.04, alpha1=math.sqrt(mean), alpha2=0, n_max1=n_max)
    assert "TruncationTail" not in codes(validate(p, AtomKind.LAMBDA))
    probs = [math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1)) for n in range(n_max + 1)]
    total = sum(probs)
    m1 = sum(n * q for n, q in enumerate(probs)) / total
    m2 = sum(n * n * q for n, q in enumerate(probs)) / total
    assert total >= 1 - 1e-6
    assert abs((m2 - m1 ** 2) / m1 - 1) < 1e-6
