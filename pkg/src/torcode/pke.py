"""Kyber.CPA public-key encryption with a pluggable l-dimensional message code.

Message bit positions i, i + nu, ..., i + n - nu form block i; each block is
mapped to a codeword and written back to the same strided positions of v.
With the baseline code (l = 1) this is the textbook q/2 * m encoding.

Randomness: a 32-byte seed is hashed with SHA3-512 into (rho, sigma). The
matrix A comes from SHAKE-128(rho || j || i) by 12-bit rejection sampling and
every noise polynomial from SHAKE-256(key || nonce) through the centered
binomial map. ``noise="zero"`` replaces the noise PRF by a zero stream.
This is a fixed realisation, not byte compatible with FIPS 203.
"""
from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .codebooks import Codebook, build_baseline, encode_labels, decode_labels
from .ring import ShakeStream, ZeroStream, cbd_poly, compress, decompress
from .torus import mod_pm_array

SCHEMA_KEY = "torcode.key/1"
SCHEMA_CT = "torcode.ciphertext/1"

PRESETS = {
    "kyber512": dict(k=2, eta1=3, eta2=2, du=10, dv=4),
    "kyber768": dict(k=3, eta1=2, eta2=2, du=10, dv=4),
    "kyber1024": dict(k=4, eta1=2, eta2=2, du=11, dv=5),
    "kyber1024-du10": dict(k=4, eta1=2, eta2=2, du=10, dv=5),
    # small k and heavy compression so failures show up in simulation
    "stressed": dict(k=2, eta1=3, eta2=2, du=7, dv=4),
}


class ParamsError(ValueError):
    pass


class TranscriptMissingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Params:
    q: int
    k: int
    eta1: int
    eta2: int
    du: int
    dv: int
    codebook: Codebook
    n: int = 256
    name: str = "custom"

    def __post_init__(self):
        if self.n < 1 or self.n & (self.n - 1):
            raise ParamsError(f"n must be a power of two, got {self.n}")
        for d, tag in ((self.du, "du"), (self.dv, "dv")):
            if d < 1 or (1 << d) >= self.q:
                raise ParamsError(f"{tag}={d} violates 2^d < q")
        if self.k < 1:
            raise ParamsError("k must be positive")
        if self.eta1 not in (1, 2, 3) or self.eta2 not in (1, 2, 3):
            raise ParamsError("eta values must lie in {1, 2, 3}")
        if self.codebook.q != self.q:
            raise ParamsError("codebook modulus differs from q")
        if self.n % self.ell:
            raise ParamsError(f"l={self.ell} does not divide n={self.n}")

    @property
    def ell(self) -> int:
        return self.codebook.ell

    @property
    def nu(self) -> int:
        return self.n // self.ell

    def with_codebook(self, cb: Codebook) -> "Params":
        return replace(self, codebook=cb)

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "q": self.q, "k": self.k, "eta1": self.eta1,
                "eta2": self.eta2, "du": self.du, "dv": self.dv, "ell": self.ell,
                "construction": self.codebook.construction, "code_params": self.codebook.params}


def make_params(preset: str = "kyber1024", codebook: Codebook | None = None, q: int = 3329,
                n: int = 256, **overrides) -> Params:
    if preset not in PRESETS:
        raise ParamsError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    vals = dict(PRESETS[preset])
    vals.update({k: v for k, v in overrides.items() if v is not None})
    cb = codebook if codebook is not None else build_baseline(q)
    return Params(q=q, n=n, codebook=cb, name=preset, **vals)


def cer(params: Params) -> float:
    """Ciphertext bytes over the 32-byte plaintext."""
    bits = params.k * params.n * params.du + params.n * params.dv
    return bits / 8 / 32


# ---------------------------------------------------------------------------
# deterministic sampling

def _seed_bytes(seed) -> bytes:
    if isinstance(seed, (bytes, bytearray)):
        return bytes(seed)
    return int(seed).to_bytes(32, "little", signed=False)


def expand_seed(seed) -> tuple[bytes, bytes]:
    h = hashlib.sha3_512(_seed_bytes(seed)).digest()
    return h[:32], h[32:]


def _parse_uniform(buf: bytes, q: int) -> np.ndarray:
    b = np.frombuffer(buf[: len(buf) // 3 * 3], dtype=np.uint8).astype(np.int64).reshape(-1, 3)
    d1 = b[:, 0] | ((b[:, 1] & 0x0F) << 8)
    d2 = (b[:, 1] >> 4) | (b[:, 2] << 4)
    vals = np.stack([d1, d2], axis=1).reshape(-1)
    return vals[vals < q]


def gen_matrix(rho: bytes, k: int, n: int, q: int) -> np.ndarray:
    """A[i, j] from SHAKE-128(rho || j || i) by rejection sampling."""
    bits = max(12, int(q - 1).bit_length())
    if bits > 12:
        raise ParamsError("matrix sampler supports q <= 4096")
    out = np.empty((k, k, n), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            size = 3 * n
            while True:
                vals = _parse_uniform(hashlib.shake_128(rho + bytes([j, i])).digest(size), q)
                if len(vals) >= n:
                    break
                size *= 2
            out[i, j] = vals[:n]
    return out


def _noise_stream(key: bytes, nonce: int, noise: str):
    if noise == "zero":
        return ZeroStream()
    if noise != "shake":
        raise ValueError(f"unknown noise source {noise!r}")
    return ShakeStream(key + bytes([nonce & 0xFF]))


def _noise_vec(key, nonce0, count, eta, n, noise):
    return np.array([cbd_poly(eta, _noise_stream(key, nonce0 + i, noise), n) for i in range(count)],
                    dtype=np.int64).reshape(count, n)


# ---------------------------------------------------------------------------
# PKE objects

@dataclass(frozen=True)
class PublicKey:
    t: np.ndarray
    rho: bytes


@dataclass(frozen=True)
class SecretKey:
    s: np.ndarray


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    secret: SecretKey
    # keygen transcript, kept for noise extraction
    A: np.ndarray = field(repr=False, default=None)
    e: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class EncTranscript:
    r: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    u_raw: np.ndarray
    v_raw: np.ndarray


@dataclass(frozen=True)
class Ciphertext:
    u: np.ndarray
    v: np.ndarray
    transcript: EncTranscript | None = field(default=None, repr=False, compare=False)

    def __eq__(self, other):
        return isinstance(other, Ciphertext) and np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash((self.u.tobytes(), self.v.tobytes()))


@dataclass(frozen=True)
class NoiseRecord:
    n_e: np.ndarray
    n_e_direct: np.ndarray
    blocks: np.ndarray
    block_ok: np.ndarray

    @property
    def consistent(self) -> bool:
        return bool(np.array_equal(self.n_e, self.n_e_direct))


def _negacyclic_int(a, b):
    return kernels.IMPLS["numpy"]["negacyclic_mul_int"](a, b)


def keygen(params: Params, seed, noise: str = "shake") -> KeyPair:
    rho, sigma = expand_seed(seed)
    A = gen_matrix(rho, params.k, params.n, params.q)
    s = _noise_vec(sigma, 0, params.k, params.eta1, params.n, noise)
    e = _noise_vec(sigma, params.k, params.k, params.eta1, params.n, noise)
    t = np.mod(kernels.matvec(A, s, params.q) + e, params.q)
    return KeyPair(PublicKey(t, rho), SecretKey(s), A, e)


def message_labels(m, params: Params) -> np.ndarray:
    m = np.asarray(m, dtype=np.int64)
    if m.shape != (params.n,):
        raise ValueError(f"message must have {params.n} bits, got shape {m.shape}")
    blocks = m.reshape(params.ell, params.nu).T
    return (blocks << np.arange(params.ell)).sum(axis=1)


def labels_to_message(labels, params: Params) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    bits = (labels[:, None] >> np.arange(params.ell)) & 1
    return bits.T.reshape(-1)


def placement(m, params: Params) -> np.ndarray:
    """Codeword coordinates of every block written to their strided positions."""
    cw = encode_labels(params.codebook, message_labels(m, params))
    return cw.T.reshape(-1)


def encrypt(pk: PublicKey, m, params: Params, seed, noise: str = "shake") -> Ciphertext:
    place = placement(m, params)
    key = hashlib.sha3_256(b"enc" + _seed_bytes(seed)).digest()
    k, n, q = params.k, params.n, params.q
    r = _noise_vec(key, 0, k, params.eta1, n, noise)
    e1 = _noise_vec(key, k, k, params.eta2, n, noise)
    e2 = _noise_vec(key, 2 * k, 1, params.eta2, n, noise)[0]
    A = gen_matrix(pk.rho, k, n, q)
    u_raw = np.mod(kernels.matvec(A, r, q, transpose=True) + e1, q)
    tr = np.zeros(n, dtype=np.int64)
    for i in range(k):
        tr += kernels.negacyclic_mul(pk.t[i], r[i], q)
    v_raw = np.mod(tr + e2 + place, q)
    return Ciphertext(compress(u_raw, params.du, q), compress(v_raw, params.dv, q),
                      EncTranscript(r, e1, e2, u_raw, v_raw))


def _decrypted_w(sk: SecretKey, ct: Ciphertext, params: Params) -> np.ndarray:
    q = params.q
    ud = decompress(ct.u, params.du, q)
    w = decompress(ct.v, params.dv, q).astype(np.int64)
    for i in range(params.k):
        w = w - kernels.negacyclic_mul(sk.s[i], ud[i], q)
    return np.mod(w, q)


def decrypt(sk: SecretKey, ct: Ciphertext, params: Params) -> np.ndarray:
    w = _decrypted_w(sk, ct, params)
    blocks = w.reshape(params.ell, params.nu).T
    return labels_to_message(decode_labels(params.codebook, blocks), params)


def extract_noise(kp: KeyPair, ct: Ciphertext, m, params: Params) -> NoiseRecord:
    """Decryption noise computed from the ciphertext and, independently, from
    the retained samples (e, r, e1, e2 and both compression errors)."""
    if ct.transcript is None or kp.e is None:
        raise TranscriptMissingError("noise extraction needs keygen and encryption transcripts")
    q, tr = params.q, ct.transcript
    place = placement(m, params)
    n_e = mod_pm_array(_decrypted_w(kp.secret, ct, params) - place, q)

    c_u = mod_pm_array(decompress(ct.u, params.du, q) - tr.u_raw, q)
    c_v = mod_pm_array(decompress(ct.v, params.dv, q) - tr.v_raw, q)
    direct = tr.e2 + c_v
    for i in range(params.k):
        direct = direct + _negacyclic_int(kp.e[i], tr.r[i]) - _negacyclic_int(kp.secret.s[i], tr.e1[i] + c_u[i])
    direct = mod_pm_array(direct, q)

    blocks = n_e.reshape(params.ell, params.nu).T
    sent = message_labels(m, params)
    w_blocks = np.mod(place + n_e, q).reshape(params.ell, params.nu).T
    ok = decode_labels(params.codebook, w_blocks) == sent
    return NoiseRecord(n_e, direct, blocks, ok)


# ---------------------------------------------------------------------------
# serialisation

def pack_bits(values, width: int) -> bytes:
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    if v.size and (v.min() < 0 or v.max() >= 1 << width):
        raise ValueError(f"value does not fit in {width} bits")
    bits = ((v[:, None] >> np.arange(width)) & 1).astype(np.uint8).reshape(-1)
    return np.packbits(bits, bitorder="little").tobytes()


def unpack_bits(buf: bytes, width: int, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")[: width * count]
    return (bits.reshape(count, width).astype(np.int64) << np.arange(width)).sum(axis=1)


def ciphertext_bytes(ct: Ciphertext, params: Params) -> bytes:
    return pack_bits(ct.u, params.du) + pack_bits(ct.v, params.dv)


def ciphertext_from_bytes(buf: bytes, params: Params) -> Ciphertext:
    k, n = params.k, params.n
    ulen = (k * n * params.du + 7) // 8
    u = unpack_bits(buf[:ulen], params.du, k * n).reshape(k, n)
    v = unpack_bits(buf[ulen:], params.dv, n)
    return Ciphertext(u, v)


def ciphertext_to_json(ct: Ciphertext, params: Params) -> str:
    return json.dumps({"schema": SCHEMA_CT, "du": params.du, "dv": params.dv,
                       "u": ct.u.tolist(), "v": ct.v.tolist(),
                       "packed": base64.b64encode(ciphertext_bytes(ct, params)).decode()})


def ciphertext_from_json(text: str) -> Ciphertext:
    obj = json.loads(text)
    if obj.get("schema") != SCHEMA_CT:
        raise ValueError("unsupported ciphertext schema")
    return Ciphertext(np.array(obj["u"], dtype=np.int64), np.array(obj["v"], dtype=np.int64))


def keypair_to_json(kp: KeyPair) -> str:
    return json.dumps({"schema": SCHEMA_KEY, "t": kp.public.t.tolist(), "rho": kp.public.rho.hex(),
                       "s": kp.secret.s.tolist()})


def keypair_from_json(text: str) -> KeyPair:
    obj = json.loads(text)
    if obj.get("schema") != SCHEMA_KEY:
        raise ValueError("unsupported key schema")
    return KeyPair(PublicKey(np.array(obj["t"], dtype=np.int64), bytes.fromhex(obj["rho"])),
                   SecretKey(np.array(obj["s"], dtype=np.int64)))


# ---------------------------------------------------------------------------
# batched simulation (numpy randomness, same algebra as above)

def _twist(n):
    j = np.arange(n)
    return np.exp(1j * np.pi * j / n)


def _fft_neg(a, tw):
    return np.fft.fft(a * tw, axis=-1)


def _ifft_neg(ah, tw):
    c = np.fft.ifft(ah, axis=-1) / tw
    r = np.rint(c.real)
    if np.abs(c.real - r).max() > 0.25:  # pragma: no cover - guards exactness
        raise ArithmeticError("floating point negacyclic product lost exactness")
    return r.astype(np.int64)


def simulate_batch(params: Params, trials: int, rng: np.random.Generator, return_noise: bool = False):
    """Run ``trials`` independent keygen/encrypt/decrypt cycles at once.

    Products are exact: they go through a twisted complex FFT and are
    rounded back with a residual check. Returns the per-trial failure flags
    (and the (trials, n) noise array when ``return_noise``).
    """
    k, n, q = params.k, params.n, params.q
    tw = _twist(n)

    def cbd(eta, shape):
        return rng.binomial(2 * eta, 0.5, size=shape).astype(np.int64) - eta

    A = rng.integers(0, q, size=(trials, k, k, n))
    s = cbd(params.eta1, (trials, k, n))
    e = cbd(params.eta1, (trials, k, n))
    r = cbd(params.eta1, (trials, k, n))
    e1 = cbd(params.eta2, (trials, k, n))
    e2 = cbd(params.eta2, (trials, n))
    m = rng.integers(0, 2, size=(trials, n))

    Ah = _fft_neg(A, tw)
    sh = _fft_neg(s, tw)
    rh = _fft_neg(r, tw)
    t = np.mod(_ifft_neg(np.einsum("tijn,tjn->tin", Ah, sh), tw) + e, q)
    u_raw = np.mod(_ifft_neg(np.einsum("tjin,tjn->tin", Ah, rh), tw) + e1, q)
    labels = (m.reshape(trials, params.ell, params.nu) << np.arange(params.ell)[None, :, None]).sum(axis=1)
    cw = encode_labels(params.codebook, labels.reshape(-1)).reshape(trials, params.nu, params.ell)
    place = cw.transpose(0, 2, 1).reshape(trials, n)
    tr = _ifft_neg((_fft_neg(t, tw) * rh).sum(axis=1), tw)
    v_raw = np.mod(tr + e2 + place, q)

    ud = decompress(compress(u_raw, params.du, q), params.du, q)
    vd = decompress(compress(v_raw, params.dv, q), params.dv, q)
    w = np.mod(vd - _ifft_neg((sh * _fft_neg(ud, tw)).sum(axis=1), tw), q)

    blocks = w.reshape(trials, params.ell, params.nu).transpose(0, 2, 1).reshape(-1, params.ell)
    got = decode_labels(params.codebook, blocks).reshape(trials, params.nu)
    fail = np.any(got != labels, axis=1)
    if return_noise:
        return fail, mod_pm_array(w - place, q)
    return fail
