import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gesi.profiles import (AUDIOMETRIC_FREQS, NH_TMTF, OA7_PROFILE, Audiogram,
                           ListenerProfile, ManifestRecord, Manifest, ProfileError, Tmtf,
                           interpolate_hl, load_profile, pta4, read_manifest, write_manifest)


def test_nh_profile_defaults_alpha_to_one():
    doc = {"kind": "NH", "audiogram": {"frequencies_hz": list(AUDIOMETRIC_FREQS),
                                        "levels_db_hl": [0] * 7}}
    p = load_profile(doc)
    assert p.alpha == 1.0
    assert pta4(p.audiogram) == 0.0


def test_hl_profile_defaults_alpha_to_half():
    doc = {"audiogram": {"frequencies_hz": [250, 1000, 4000], "levels_db_hl": [20, 30, 50]}}
    p = load_profile(json.dumps(doc))
    assert p.kind == "HL" and p.alpha == 0.5
    assert p.tmtf == NH_TMTF


def test_oa7_profile():
    assert pta4(OA7_PROFILE.audiogram) == pytest.approx(17.5, abs=1e-12)
    assert OA7_PROFILE.tmtf == Tmtf(-23.2, 51.0)
    assert load_profile(OA7_PROFILE.dumps()) == OA7_PROFILE


@pytest.mark.parametrize("doc, msg", [
    ({"audiogram": {"frequencies_hz": [1000, 500], "levels_db_hl": [0, 0]}}, "ascending"),
    ({"audiogram": {"frequencies_hz": [1000], "levels_db_hl": [0]}}, "two points"),
    ({"audiogram": {"frequencies_hz": [500, 1000], "levels_db_hl": [0, 130]}}, "within"),
    ({"audiogram": {"frequencies_hz": [500, 1000], "levels_db_hl": [0, 10]}, "alpha": 1.5},
     "alpha"),
    ({"audiogram": {"frequencies_hz": [500, 1000], "levels_db_hl": [0, 10]},
      "tmtf": {"lps_db": -20, "fc_hz": 0}}, "positive"),
    ({"audiogram": {"frequencies_hz": [500, 1000], "levels_db_hl": [0, 10]}, "extra": 1},
     "unknown"),
    ({}, "audiogram"),
])
def test_schema_violations(doc, msg):
    with pytest.raises(ProfileError, match=msg):
        load_profile(doc)


def test_load_profile_from_path(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(OA7_PROFILE.dumps())
    assert load_profile(path) == OA7_PROFILE


def test_pta4_arithmetic():
    ag = Audiogram((500, 1000, 2000, 4000), (10, 15, 20, 25))
    assert pta4(ag) == 17.5
    assert pta4(Audiogram.flat(0.0)) == 0.0


def test_pta4_requires_coverage():
    with pytest.raises(ProfileError):
        pta4(Audiogram((1000, 4000), (10, 20)))


def test_interpolate_hl_examples():
    ag = Audiogram((125, 1000, 2000), (5, 20, 40))
    assert interpolate_hl(ag, 1000) == 20
    assert interpolate_hl(ag, math.sqrt(1000 * 2000)) == pytest.approx(30, abs=1e-12)
    assert interpolate_hl(ag, 100) == 5
    assert interpolate_hl(ag, 16000) == 40


levels = st.floats(-20, 120, allow_nan=False)


@st.composite
def audiograms(draw):
    n = draw(st.integers(2, 9))
    freqs = sorted(draw(st.lists(st.floats(50, 16000), min_size=n, max_size=n, unique=True)))
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        freqs = list(np.geomspace(100, 8000, n))
    return Audiogram(tuple(freqs), tuple(draw(st.lists(levels, min_size=n, max_size=n))))


@settings(max_examples=60, deadline=None)
@given(audiograms(), st.floats(0, 1), st.floats(-30, 0), st.floats(1, 200))
def test_profile_round_trip(ag, alpha, lps, fc):
    p = ListenerProfile(ag, Tmtf(lps, fc), alpha, "L1", "HL")
    assert load_profile(p.dumps()) == p
    assert load_profile(p.to_dict()) == p


@settings(max_examples=60, deadline=None)
@given(audiograms(), st.floats(0, 1))
def test_interpolation_monotone_between_knots(ag, u):
    f, lv = ag.frequencies_hz, ag.levels_db_hl
    for k, fk in enumerate(f):
        assert interpolate_hl(ag, fk) == pytest.approx(lv[k], abs=1e-9)
    for k in range(len(f) - 1):
        q = np.exp(np.linspace(np.log(f[k]), np.log(f[k + 1]), 12))
        v = interpolate_hl(ag, q)
        step = np.diff(v) * np.sign(lv[k + 1] - lv[k] or 1.0)
        assert np.all(step >= -1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(levels, min_size=4, max_size=4), st.permutations(range(4)))
def test_pta4_is_mean_and_permutation_invariant(vals, perm):
    ag = Audiogram((500, 1000, 2000, 4000), tuple(vals))
    brute = sum(vals) / 4.0
    assert abs(pta4(ag) - brute) <= 1e-12
    assert abs(sum(vals[i] for i in perm) / 4.0 - brute) <= 1e-12


def test_manifest_round_trip(tmp_path):
    recs = [ManifestRecord("a.wav", "b.wav", "Unpro", -6.0, "L1", 42.0, "", "w1"),
            ManifestRecord("a.wav", "c.wav", "IRM", 6.0, "L2", None, "p.json", "")]
    write_manifest(Manifest(recs, tmp_path), tmp_path / "m.csv")
    m = read_manifest(tmp_path / "m.csv")
    assert m.records == recs
    assert m.resolve("a.wav") == tmp_path / "a.wav"


@pytest.mark.parametrize("row, msg", [
    ("a.wav,,Unpro,0", "empty"),
    ("a.wav,b.wav,Unpro,inf", "finite"),
    ("a.wav,b.wav,Unpro,0,L,120", "SI"),
    ("a.wav,b.wav,Unpro,abc", "snr"),
])
def test_manifest_validation(tmp_path, row, msg):
    path = tmp_path / "m.csv"
    path.write_text("ref,test,condition,snr_db,listener,si\n" + row + "\n")
    with pytest.raises(ProfileError, match=msg):
        read_manifest(path)


def test_manifest_tsv_and_comments(tmp_path):
    path = tmp_path / "m.tsv"
    path.write_text("# a comment\nref\ttest\nx.wav\ty.wav\n")
    m = read_manifest(path)
    assert len(m) == 1 and m.records[0].test == "y.wav"
    assert math.isnan(m.records[0].snr_db)
