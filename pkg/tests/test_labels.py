import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elmsync.errors import ConfigurationError, DomainError
from elmsync.frame import SystemParams
from elmsync.labels import (
    LabelScheme,
    label_isifree,
    label_midpoint,
    label_onehot_end,
    make_labels,
)

P = SystemParams()


def ones(v):
    return np.flatnonzero(v).tolist()


def test_onehot_end_examples():
    assert ones(label_onehot_end(0, P, 8)) == [17]
    assert ones(label_onehot_end(10, P, 8)) == [27]
    assert ones(label_onehot_end(P.Nd - P.Ng - 2, P, 8)) == [P.Nd - 1]


def test_midpoint_examples():
    assert ones(label_midpoint(0, P, 8)) == [12]
    assert ones(label_midpoint(20, P, 8)) == [32]
    assert ones(label_midpoint(7, P, 16)) == [7 + 16]


def test_isifree_examples():
    assert ones(label_isifree(0, P, 8)) == list(range(8, 18))
    assert ones(label_isifree(0, P, 16)) == [16, 17]
    assert ones(label_isifree(5, P, 8)) == list(range(13, 23))


@pytest.mark.parametrize("theta,L", [(-1, 8), (P.max_theta + 1, 8), (0, 0), (0, P.Ng + 2)])
def test_out_of_range(theta, L):
    with pytest.raises(DomainError):
        label_isifree(theta, P, L)


def test_scheme_parsing():
    assert LabelScheme.parse("isi_free") is LabelScheme.ISI_FREE
    assert LabelScheme.MIDPOINT.display_name == "Prop_T_mid"
    with pytest.raises(ConfigurationError):
        LabelScheme.parse("gaussian")


geometry = st.integers(1, 6).flatmap(
    lambda logn: st.tuples(st.just(2**logn), st.integers(0, 2**logn - 1))
).flatmap(lambda nn: st.tuples(st.just(nn[0]), st.just(nn[1]), st.integers(1, nn[1] + 1)))


@given(geometry, st.data())
def test_label_geometry(geo, data):
    N, Ng, L = geo
    p = SystemParams(N=N, Ng=Ng)
    theta = data.draw(st.integers(0, p.max_theta))
    isi = make_labels("isi_free", [theta], p, L)[0]
    mid = make_labels("midpoint", [theta], p, L)[0]
    one = make_labels("onehot_end", [theta], p, L)[0]
    assert set(np.unique(np.concatenate([isi, mid, one]))) <= {0.0, 1.0}
    support = np.flatnonzero(isi)
    assert len(support) == Ng - L + 2
    assert np.array_equal(support, np.arange(support[0], support[-1] + 1))
    assert mid.sum() == 1 and one.sum() == 1
    assert isi[np.argmax(mid)] == 1 and isi[np.argmax(one)] == 1
    if theta < p.max_theta:
        for scheme, v in (("isi_free", isi), ("midpoint", mid), ("onehot_end", one)):
            shifted = make_labels(scheme, [theta + 1], p, L)[0]
            assert np.array_equal(shifted[1:], v[:-1])
