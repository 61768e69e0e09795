import pytest

from odeinv.proofcert import (CertificateFormatError, HEADER, check_certificate, deserialize,
                              serialize)
import corpus
import fuzzing


@pytest.fixture(scope="module")
def texts():
    return {name: corpus.certificate_text(name) for name in corpus.all_certificate_names()}


@pytest.mark.parametrize("name", corpus.all_certificate_names())
def test_round_trip_and_check(texts, name):
    text = texts[name]
    cert = deserialize(text)
    assert serialize(cert) == text
    assert check_certificate(cert).ok
    assert check_certificate(text.encode("utf-8")).ok


@pytest.mark.parametrize("name", ["circle_dbx", "open_disk_sai", "half_disk_refuted",
                                  "rotation_vdbx", "loop_reduction"])
def test_mutations_are_rejected(texts, name):
    n_sites, accepted = fuzzing.accepted_mutants(texts[name], n=30, seed=1)
    assert n_sites > 0
    assert accepted == []


def test_failure_reports_path(texts):
    text = texts["circle_dbx"].replace("g = -1/2*u^2 - 1/2*v^2", "g = -1/2*u^2")
    result = check_certificate(text)
    assert not result.ok
    assert result.path.startswith("root")
    assert "failure at" in str(result)


def test_claim_swap_is_rejected(texts):
    text = texts["axis_refuted"].replace("claim = not-invariant", "claim = invariant")
    assert not check_certificate(text).ok


def test_candidate_swap_is_rejected(texts):
    text = texts["circle_dbx"].replace("candidate = u^2 + v^2 - 1 = 0",
                                       "candidate = u^2 + v^2 - 4 = 0")
    assert not check_certificate(text).ok


@pytest.mark.parametrize("text, line", [
    ("odeinv-certificate v9\nclaim = invariant\n", 1),
    ("", 1),
    (HEADER + "\nclaim = maybe\n", 2),
    (HEADER + "\nclaim = invariant\nbegin DbxEq\n  e = x\n", 0),
    (HEADER + "\nclaim = invariant\ncandidate = x = = 0\n", 3),
    (HEADER + "\nclaim = invariant\nend\n", 3),
])
def test_format_errors(text, line):
    with pytest.raises(CertificateFormatError) as info:
        check_certificate(text)
    if line:
        assert info.value.line == line


def test_invalid_utf8():
    with pytest.raises(CertificateFormatError):
        deserialize(b"\xff\xfe")
