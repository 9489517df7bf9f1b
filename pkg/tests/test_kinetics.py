import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluidic.kinetics import (
    Reaction,
    ReactionKind,
    SignalProfile,
    Species,
    SpeciesTable,
    annihilation_step,
    catalytic_step,
    converted_amount,
    eval_profile,
)
from oracles import rk4_annihilation, rk4_catalytic


# --- species table -----------------------------------------------------------


def test_species_table_rejects_duplicates_and_bad_diffusion():
    with pytest.raises(ValueError):
        SpeciesTable([("A", 1e-8), ("A", 1e-8)])
    with pytest.raises(ValueError):
        Species("A", 0.0)
    with pytest.raises(ValueError):
        Species("", 1e-8)


def test_reaction_invariants():
    with pytest.raises(ValueError):
        Reaction(ReactionKind.ANNIHILATION, "A", "A", "P", 1.0)
    with pytest.raises(ValueError):
        Reaction(ReactionKind.ANNIHILATION, "A", "B", "P", 0.0)


# --- injection profiles ------------------------------------------------------


def test_input_pulse_profile_values():
    prof = SignalProfile.pulse(8.0, 1.0, 3.0)
    assert eval_profile(prof, 2.0) == 8.0
    assert eval_profile(prof, 0.5) == 0.0
    assert eval_profile(prof, 1.0) == 8.0  # step is on at its onset
    assert eval_profile(prof, 3.0) == 0.0
    assert prof.max_level() == 8.0
    assert prof.final_level() == 0.0


def test_empty_profile_is_zero_everywhere():
    prof = SignalProfile()
    assert eval_profile(prof, 0.0) == 0.0
    assert eval_profile(prof, 123.4) == 0.0


def test_profile_rejects_negative_time_and_bad_steps():
    prof = SignalProfile.constant(2.0)
    with pytest.raises(ValueError):
        eval_profile(prof, -0.1)
    with pytest.raises(ValueError):
        SignalProfile([(3.0, 8.0), (1.0, -8.0)])  # onsets must be ordered
    with pytest.raises(ValueError):
        SignalProfile([(0.0, -1.0)])  # value dips below zero


# --- annihilation ------------------------------------------------------------


def test_annihilation_missing_reactant_is_inert():
    assert annihilation_step(4.0, 0.0, 5000.0, 0.01) == (4.0, 0.0, 0.0)


def test_annihilation_equal_concentrations_closed_form():
    a2, b2, x = annihilation_step(1.0, 1.0, 1.0, 1.0)
    # dx/dt = k (a-x)^2 integrates to x = a^2 k t / (1 + a k t)
    assert x == pytest.approx(0.5, rel=1e-12)
    assert a2 == pytest.approx(0.5, rel=1e-12)
    assert b2 == pytest.approx(0.5, rel=1e-12)


def test_annihilation_strong_depletion_limit():
    a2, b2, x = annihilation_step(4.0, 2.0, 5000.0, 0.01)
    assert a2 == pytest.approx(2.0, abs=1e-9)
    assert b2 == pytest.approx(0.0, abs=1e-9)
    assert x == pytest.approx(2.0, abs=1e-9)


def test_annihilation_huge_exponent_no_overflow():
    a2, b2, x = annihilation_step(10.0, 1.0, 5000.0, 1e6)
    assert math.isfinite(x)
    assert x == pytest.approx(1.0, abs=1e-12)


def test_annihilation_rejects_negative_inputs():
    for args in ((-1, 1, 1, 1), (1, -1, 1, 1), (1, 1, -1, 1), (1, 1, 1, -1)):
        with pytest.raises(ValueError):
            annihilation_step(*args)


@settings(max_examples=200)
@given(
    a=st.floats(0, 10),
    b=st.floats(0, 10),
    kdt=st.floats(0, 100),
)
def test_annihilation_conservation_properties(a, b, kdt):
    k = 5000.0
    dt = kdt / k
    a2, b2, x = annihilation_step(a, b, k, dt)
    assert 0.0 <= x <= min(a, b) + 1e-15
    assert (a2 - b2) == pytest.approx(a - b, rel=1e-12, abs=1e-12)
    assert a2 + x == pytest.approx(a, rel=1e-12, abs=1e-12)
    assert b2 + x == pytest.approx(b, rel=1e-12, abs=1e-12)
    assert a2 >= -1e-15 and b2 >= -1e-15


def test_annihilation_matches_ode_oracle_sample():
    rng = np.random.default_rng(11)
    n = 150
    a = rng.uniform(0, 10, n)
    b = rng.uniform(0, 10, n)
    kdt = rng.uniform(0, 100, n)
    k = 5000.0
    dt = kdt / k
    x_closed = np.array(
        [converted_amount(a[i], b[i], k, dt[i]) for i in range(n)]
    )
    x_ode = rk4_annihilation(a, b, k, dt, n=50_000)
    scale = np.maximum(np.maximum(a, b), 1e-12)
    assert np.max(np.abs(x_closed - x_ode) / scale) < 1e-6


# --- catalytic conversion ----------------------------------------------------


def test_catalytic_no_catalyst_is_inert():
    assert catalytic_step(0.0, 1.0, 5000.0, 1.0) == (1.0, 0.0)


def test_catalytic_decay_formula():
    amp2, gain = catalytic_step(0.5, 1.0, 5000.0, 0.005)
    assert amp2 == pytest.approx(math.exp(-12.5), rel=1e-12)
    assert gain == pytest.approx(1.0 - math.exp(-12.5), rel=1e-12)


def test_catalytic_zero_time_is_identity():
    assert catalytic_step(2.0, 3.0, 5000.0, 0.0) == (3.0, 0.0)


def test_catalytic_rejects_negative_inputs():
    with pytest.raises(ValueError):
        catalytic_step(-0.1, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        catalytic_step(0.1, -1.0, 1.0, 1.0)


@settings(max_examples=200)
@given(
    cat=st.floats(0, 10),
    amp=st.floats(0, 10),
    kdt1=st.floats(0, 50),
    kdt2=st.floats(0, 50),
)
def test_catalytic_conservation_and_monotonicity(cat, amp, kdt1, kdt2):
    k = 5000.0
    lo, hi = sorted((kdt1, kdt2))
    amp_lo, gain_lo = catalytic_step(cat, amp, k, lo / k)
    amp_hi, gain_hi = catalytic_step(cat, amp, k, hi / k)
    assert amp_lo + gain_lo == pytest.approx(amp, rel=1e-12, abs=1e-12)
    assert amp_hi <= amp_lo + 1e-15  # longer exposure never leaves more


def test_catalytic_matches_ode_oracle_sample():
    rng = np.random.default_rng(12)
    n = 150
    cat = rng.uniform(0, 10, n)
    amp = rng.uniform(0, 10, n)
    kdt = rng.uniform(0, 100, n)
    k = 5000.0
    dt = kdt / k
    amp_closed = np.array(
        [catalytic_step(cat[i], amp[i], k, dt[i])[0] for i in range(n)]
    )
    amp_ode = rk4_catalytic(cat, amp, k, dt, n=50_000)
    scale = np.maximum(amp, 1e-12)
    assert np.max(np.abs(amp_closed - amp_ode) / scale) < 1e-6
