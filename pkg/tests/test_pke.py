import numpy as np
import pytest

from torcode import codebooks as cbk
from torcode import pke

Q = 3329


@pytest.fixture(scope="module")
def books():
    return {name: cbk.build(name, Q) for name in cbk.CONSTRUCTIONS}


def test_cer_rows():
    assert [pke.cer(pke.make_params(p)) for p in ("kyber1024", "kyber1024-du10", "kyber512", "kyber768")] == \
        [49, 45, 24, 34]


def test_params_validation():
    with pytest.raises(pke.ParamsError):
        pke.make_params("kyber1024", du=12)
    with pytest.raises(pke.ParamsError):
        pke.make_params("kyber1024", eta1=4)
    with pytest.raises(pke.ParamsError):
        pke.make_params("nope")
    with pytest.raises(pke.ParamsError):
        pke.make_params("kyber1024", n=100)
    with pytest.raises(pke.ParamsError):
        pke.make_params("kyber1024", codebook=cbk.build_baseline(17))


@pytest.mark.parametrize("name", cbk.CONSTRUCTIONS)
def test_round_trip_all_codes(books, name):
    params = pke.make_params("kyber1024", books[name])
    rng = np.random.default_rng(1)
    for seed in range(3):
        kp = pke.keygen(params, seed)
        m = rng.integers(0, 2, params.n)
        ct = pke.encrypt(kp.public, m, params, 100 + seed)
        assert np.array_equal(pke.decrypt(kp.secret, ct, params), m)


def test_determinism(books):
    params = pke.make_params("kyber768", books["gtd4"])
    m = np.arange(256) % 2
    a = pke.encrypt(pke.keygen(params, 5).public, m, params, 9)
    b = pke.encrypt(pke.keygen(params, 5).public, m, params, 9)
    c = pke.encrypt(pke.keygen(params, 5).public, m, params, 10)
    assert a == b and a != c


def test_zero_noise_decrypts(books):
    params = pke.make_params("kyber1024", books["gtd8"])
    kp = pke.keygen(params, 1, noise="zero")
    assert not kp.secret.s.any()
    m = np.ones(256, dtype=np.int64)
    ct = pke.encrypt(kp.public, m, params, 2, noise="zero")
    assert np.array_equal(pke.decrypt(kp.secret, ct, params), m)


def test_noise_extraction_consistent(books):
    for name in ("baseline", "minal", "gtd8"):
        params = pke.make_params("kyber512", books[name])
        kp = pke.keygen(params, 3)
        m = np.random.default_rng(2).integers(0, 2, 256)
        ct = pke.encrypt(kp.public, m, params, 4)
        rec = pke.extract_noise(kp, ct, m, params)
        assert rec.consistent
        assert rec.blocks.shape == (params.nu, params.ell)
        assert rec.block_ok.all()


def test_noise_extraction_needs_transcript(books):
    params = pke.make_params("kyber512")
    kp = pke.keygen(params, 3)
    m = np.zeros(256, dtype=np.int64)
    ct = pke.ciphertext_from_bytes(pke.ciphertext_bytes(pke.encrypt(kp.public, m, params, 1), params), params)
    with pytest.raises(pke.TranscriptMissingError):
        pke.extract_noise(kp, ct, m, params)


def test_serialisation(books):
    params = pke.make_params("kyber1024", books["gtd4"])
    kp = pke.keygen(params, 7)
    m = np.random.default_rng(0).integers(0, 2, 256)
    ct = pke.encrypt(kp.public, m, params, 8)
    raw = pke.ciphertext_bytes(ct, params)
    assert len(raw) == 1568
    assert pke.ciphertext_from_bytes(raw, params) == ct
    assert pke.ciphertext_from_json(pke.ciphertext_to_json(ct, params)) == ct
    kp2 = pke.keypair_from_json(pke.keypair_to_json(kp))
    assert np.array_equal(pke.decrypt(kp2.secret, ct, params), m)


def test_message_layout(books):
    params = pke.make_params("kyber1024", books["gtd4"])
    m = np.random.default_rng(3).integers(0, 2, 256)
    labels = pke.message_labels(m, params)
    assert labels.shape == (64,)
    assert labels[5] == m[5] + 2 * m[69] + 4 * m[133] + 8 * m[197]
    assert np.array_equal(pke.labels_to_message(labels, params), m)


def test_batched_simulation_zero_failures_at_kyber(books):
    params = pke.make_params("kyber1024", books["gtd4"])
    fail, noise = pke.simulate_batch(params, 64, np.random.default_rng(0), return_noise=True)
    assert not fail.any()
    assert noise.shape == (64, 256) and np.abs(noise).max() < 600
