import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockdistill.errors import ConfigError, InvalidStateError, TruncationError
from fockdistill.fockcore import PureState
from fockdistill.stateprep import (
    SourceKind,
    balanced_beam_splitter,
    gamma_from_nbar,
    mean_photon,
    mode_photon_numbers,
    nbar_from_gamma,
    prepare_source,
    smsv_coefficients,
    squeezing_db,
    vacuum,
)

from oracles import ladder_loop


@settings(max_examples=50, deadline=None)
@given(nbar=st.floats(0.0, 50.0), kind=st.sampled_from(["1msv", "2msv"]))
def test_gamma_nbar_round_trip(nbar, kind):
    g = gamma_from_nbar(kind, nbar)
    assert 0.0 <= g < 1.0
    assert nbar_from_gamma(kind, g) == pytest.approx(nbar, rel=1e-9, abs=1e-12)


def test_gamma_conventions():
    assert gamma_from_nbar("1msv", 1.0) == pytest.approx(math.sqrt(0.5))
    assert gamma_from_nbar("2msv", 1.0) == pytest.approx(math.sqrt(1 / 3))
    with pytest.raises(ConfigError):
        gamma_from_nbar("1msv", -0.1)
    with pytest.raises(ConfigError, match="unknown source"):
        SourceKind.coerce("3msv")


def test_squeezing_at_crossover_photon_number():
    # 0.21 photons of single-mode squeezing is about 3.9 dB
    assert squeezing_db(gamma_from_nbar("1msv", 0.21)) == pytest.approx(3.9, abs=0.05)


def test_smsv_coefficients_against_factorials():
    g, d = 0.3, 30
    c = smsv_coefficients(g, d)
    expected = np.zeros(d)
    for n in range(d // 2):
        expected[2 * n] = (1 - g * g) ** 0.25 * math.sqrt(math.factorial(2 * n)) / math.factorial(n) * (g / 2) ** n
    np.testing.assert_allclose(c, expected / np.linalg.norm(expected), atol=1e-14)
    assert np.all(c[1::2] == 0.0)


def test_smsv_tail_check():
    with pytest.raises(TruncationError, match="increase the cutoff"):
        smsv_coefficients(0.8, 10)


def test_beam_splitter_single_photon_columns():
    d = 4
    u = balanced_beam_splitter(d)
    s = 2 ** -0.5
    col10 = u[:, 1 * d + 0]
    col01 = u[:, 0 * d + 1]
    assert col10[1 * d + 0] == pytest.approx(s) and col10[0 * d + 1] == pytest.approx(s)
    assert col01[1 * d + 0] == pytest.approx(s) and col01[0 * d + 1] == pytest.approx(-s)


def test_beam_splitter_unitary_on_low_sectors_and_intertwines_creation():
    d = 6
    u = balanced_beam_splitter(d)
    low = [m * d + n for m in range(d) for n in range(d) if m + n < d]
    block = u[np.ix_(low, low)]
    np.testing.assert_allclose(block.conj().T @ block, np.eye(len(low)), atol=1e-12)
    adag = ladder_loop(d).T
    a_in = np.kron(adag, np.eye(d))
    out = (np.kron(adag, np.eye(d)) + np.kron(np.eye(d), adag)) / math.sqrt(2)
    # U a^dag |v> = (a^dag + b^dag)/sqrt2 U |v> for |v> with total photons below d - 1
    for i in (m * d + n for m in range(d) for n in range(d) if m + n < d - 1):
        v = np.zeros(d * d)
        v[i] = 1.0
        np.testing.assert_allclose(u @ (a_in @ v), out @ (u @ v), atol=1e-12)


def test_one_msv_is_split_squeezed_vacuum():
    # split in a space large enough to hold every term, then truncate to d
    d, big, nbar = 12, 23, 0.05
    g = gamma_from_nbar("1msv", nbar)
    product = np.kron(smsv_coefficients(g, big), np.eye(big)[0])
    split = (balanced_beam_splitter(big) @ product).real.reshape(big, big)[:d, :d]
    psi = prepare_source("1msv", nbar, d)
    np.testing.assert_allclose(psi.matrix, split / np.linalg.norm(split), atol=1e-12)


def test_two_msv_closed_form():
    d, nbar = 20, 0.1
    g = gamma_from_nbar("2msv", nbar)
    psi = prepare_source(SourceKind.TWO_MSV, nbar, d)
    c = psi.matrix
    for n in range(6):
        assert c[n, n] == pytest.approx(math.sqrt(1 - g * g) * g ** n, rel=1e-9)
    assert np.count_nonzero(c - np.diag(np.diag(c))) == 0


@pytest.mark.parametrize("kind", ["1msv", "2msv"])
@pytest.mark.parametrize("nbar", [1e-3, 0.1, 0.5])
def test_mean_photon_number_is_nbar(kind, nbar):
    psi = prepare_source(kind, nbar, 31)
    assert mean_photon(psi) == pytest.approx(nbar, abs=1e-6)
    na, nb = mode_photon_numbers(psi)
    assert na == pytest.approx(nb, abs=1e-12)
    assert mean_photon(psi.to_density()) == pytest.approx(nbar, abs=1e-6)


def test_prepare_source_truncation_error():
    with pytest.raises(TruncationError, match="increase the cutoff"):
        prepare_source("1msv", 0.5, 8)


def test_mean_photon_requires_normalized_state():
    raw = PureState(2, np.array([1.0, 1.0, 0.0, 0.0]), normalized=False)
    with pytest.raises(InvalidStateError):
        mean_photon(raw)


def test_vacuum_source():
    psi = prepare_source("2msv", 0.0, 4)
    np.testing.assert_array_equal(psi.amplitudes, vacuum(4).amplitudes)


def test_smsv_example_ratio_and_norm():
    # at d=15 the tail (8.8e-10) exceeds the 1e-10 guard, so the check runs at d=17
    with pytest.raises(TruncationError):
        smsv_coefficients(0.3, 15)
    c = smsv_coefficients(0.3, 17)
    assert c[2] / c[0] == pytest.approx(math.sqrt(2) * 0.15, abs=1e-12)
    assert np.sum(c ** 2) == pytest.approx(1.0, abs=1e-10)


def test_split_state_has_weak_squeezing_pattern():
    g = 0.05
    m = prepare_source("1msv", nbar_from_gamma("1msv", g), 8).matrix
    lead = g / math.sqrt(2) * np.array([0.5, 1 / math.sqrt(2), 0.5])
    np.testing.assert_allclose([m[2, 0] / m[0, 0], m[1, 1] / m[0, 0], m[0, 2] / m[0, 0]], lead, atol=g ** 2)
