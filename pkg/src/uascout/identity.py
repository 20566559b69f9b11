"""User identity tokens: anonymous, username/password, self-signed X509.

Password material is protected with the legacy scheme: the UTF-8 password is
concatenated with the server nonce, prefixed with the combined length as a
4-octet little-endian integer, and encrypted block-wise under the server
certificate's RSA public key. Plaintext passwords only ever travel when the
effective token security policy is None.
"""

from __future__ import annotations

import datetime
import ipaddress
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

from cryptography import x509
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.x509.oid import ExtendedKeyUsageOID, NameOID

import uascout
from uascout import policies
from uascout.wire.bodies import (
    SignatureData,
    TYPE_ANONYMOUS_TOKEN,
    TYPE_USERNAME_TOKEN,
    TYPE_X509_TOKEN,
    UserTokenType,
)
from uascout.wire.codec import Writer
from uascout.wire.values import ExtensionBody, NodeRef


class IdentityError(Exception):
    """Base class for identity construction failures."""


class NoSuchPolicy(IdentityError):
    """Endpoint does not advertise a token policy of the requested type."""


class CertificateUnparseable(IdentityError):
    """Server certificate could not be parsed as DER X509."""


class PolicyUnsupportedForEncryption(IdentityError):
    """Token security policy demands algorithms this tool does not speak."""


class PolicyUnsupportedForSigning(IdentityError):
    """No signature algorithm known for the token security policy."""


class KeyMismatch(IdentityError):
    """Certificate public key does not belong to the supplied private key."""


class CredentialSource(Enum):
    DEFAULT_LIST = "default_list"
    USER_SUPPLIED = "user_supplied"


@dataclass(frozen=True)
class Credential:
    username: str
    password: str
    source: CredentialSource = CredentialSource.USER_SUPPLIED

    def __post_init__(self):
        if not self.username:
            raise ValueError("username must be non-empty (anonymous probes use the anonymous token)")


@dataclass(frozen=True)
class AnonymousToken:
    policy_id: str

    def to_extension(self) -> ExtensionBody:
        w = Writer()
        w.write_string(self.policy_id)
        return ExtensionBody(NodeRef(0, TYPE_ANONYMOUS_TOKEN), w.data())


@dataclass(frozen=True)
class UserNameToken:
    policy_id: str
    username: str
    password: bytes  # plaintext UTF-8 or RSA ciphertext per algorithm_uri
    encryption_algorithm_uri: str

    def to_extension(self) -> ExtensionBody:
        w = Writer()
        w.write_string(self.policy_id)
        w.write_string(self.username)
        w.write_bytes(self.password)
        w.write_string(self.encryption_algorithm_uri or None)
        return ExtensionBody(NodeRef(0, TYPE_USERNAME_TOKEN), w.data())


@dataclass(frozen=True)
class X509Token:
    policy_id: str
    certificate_der: bytes
    signature_algorithm_uri: str
    signature: bytes

    def to_extension(self) -> ExtensionBody:
        w = Writer()
        w.write_string(self.policy_id)
        w.write_bytes(self.certificate_der)
        return ExtensionBody(NodeRef(0, TYPE_X509_TOKEN), w.data())

    def token_signature(self) -> SignatureData:
        if not self.signature_algorithm_uri:
            return SignatureData(None, None)
        return SignatureData(self.signature_algorithm_uri, self.signature)


IdentityToken = Union[AnonymousToken, UserNameToken, X509Token]


def _policies_of_type(endpoint, token_type: UserTokenType):
    return [p for p in endpoint.user_token_policies if p.token_type == token_type]


def effective_policy_uri(endpoint, token_policy) -> str:
    """Token policies with an empty URI inherit the endpoint's policy."""
    return token_policy.security_policy_uri or endpoint.security_policy_uri


def build_anonymous(endpoint) -> AnonymousToken:
    """Anonymous token for the first advertised anonymous policy."""
    candidates = _policies_of_type(endpoint, UserTokenType.ANONYMOUS)
    if not candidates:
        raise NoSuchPolicy("endpoint advertises no anonymous token policy")
    return AnonymousToken(policy_id=candidates[0].policy_id)


# RSA plaintext-block overhead per padding scheme.
_PKCS1_OVERHEAD = 11
_OAEP_SHA1_OVERHEAD = 42
_OAEP_SHA256_OVERHEAD = 66

_ENCRYPTION_SCHEMES = {
    policies.POLICY_BASIC128RSA15: (policies.ALG_RSA_15, _PKCS1_OVERHEAD),
    policies.POLICY_BASIC256: (policies.ALG_RSA_OAEP, _OAEP_SHA1_OVERHEAD),
    policies.POLICY_BASIC256SHA256: (policies.ALG_RSA_OAEP, _OAEP_SHA1_OVERHEAD),
    policies.POLICY_AES128_SHA256_RSAOAEP: (policies.ALG_RSA_OAEP, _OAEP_SHA1_OVERHEAD),
    policies.POLICY_AES256_SHA256_RSAPSS: (policies.ALG_RSA_OAEP_SHA256, _OAEP_SHA256_OVERHEAD),
}

_SIGNATURE_SCHEMES = {
    policies.POLICY_BASIC128RSA15: policies.ALG_RSA_SHA1,
    policies.POLICY_BASIC256: policies.ALG_RSA_SHA1,
    policies.POLICY_BASIC256SHA256: policies.ALG_RSA_SHA256,
    policies.POLICY_AES128_SHA256_RSAOAEP: policies.ALG_RSA_SHA256,
    policies.POLICY_AES256_SHA256_RSAPSS: policies.ALG_RSA_PSS_SHA256,
}


def _rsa_padding(algorithm_uri: str):
    if algorithm_uri == policies.ALG_RSA_15:
        return padding.PKCS1v15()
    if algorithm_uri == policies.ALG_RSA_OAEP:
        return padding.OAEP(
            mgf=padding.MGF1(algorithm=hashes.SHA1()),
            algorithm=hashes.SHA1(),
            label=None,
        )
    if algorithm_uri == policies.ALG_RSA_OAEP_SHA256:
        return padding.OAEP(
            mgf=padding.MGF1(algorithm=hashes.SHA256()),
            algorithm=hashes.SHA256(),
            label=None,
        )
    raise PolicyUnsupportedForEncryption(f"no padding for {algorithm_uri}")


def encrypt_legacy_password(
    password: bytes, nonce: bytes, public_key: rsa.RSAPublicKey, algorithm_uri: str, overhead: int
) -> bytes:
    plaintext = len(password + nonce).to_bytes(4, "little") + password + nonce
    block = public_key.key_size // 8 - overhead
    pad = _rsa_padding(algorithm_uri)
    out = b""
    for offset in range(0, len(plaintext), block):
        out += public_key.encrypt(plaintext[offset : offset + block], pad)
    return out


def decrypt_legacy_password(
    ciphertext: bytes,
    private_key: rsa.RSAPrivateKey,
    algorithm_uri: str,
    nonce_length: int = 32,
) -> Tuple[bytes, bytes]:
    """Server-side inverse; returns (password, nonce). Raises ValueError on garbage."""
    block = private_key.key_size // 8
    if len(ciphertext) == 0 or len(ciphertext) % block != 0:
        raise ValueError("ciphertext is not whole RSA blocks")
    pad = _rsa_padding(algorithm_uri)
    plaintext = b""
    for offset in range(0, len(ciphertext), block):
        plaintext += private_key.decrypt(ciphertext[offset : offset + block], pad)
    if len(plaintext) < 4:
        raise ValueError("plaintext too short for its length prefix")
    declared = int.from_bytes(plaintext[:4], "little")
    if declared != len(plaintext) - 4:
        raise ValueError(f"length prefix {declared} does not match payload {len(plaintext) - 4}")
    if declared < nonce_length:
        raise ValueError("payload shorter than a nonce")
    split = 4 + declared - nonce_length
    return plaintext[4:split], plaintext[split:]


def build_username(
    endpoint,
    credential: Credential,
    server_certificate: Optional[bytes],
    server_nonce: Optional[bytes],
) -> UserNameToken:
    """Username token; password protected per the effective token policy."""
    candidates = _policies_of_type(endpoint, UserTokenType.USER_NAME)
    if not candidates:
        raise NoSuchPolicy("endpoint advertises no username token policy")
    token_policy = candidates[0]
    effective = effective_policy_uri(endpoint, token_policy)
    password_bytes = credential.password.encode("utf-8")

    if policies.is_none_policy(effective):
        return UserNameToken(
            policy_id=token_policy.policy_id,
            username=credential.username,
            password=password_bytes,
            encryption_algorithm_uri="",
        )

    scheme = _ENCRYPTION_SCHEMES.get(effective)
    if scheme is None:
        raise PolicyUnsupportedForEncryption(f"token policy {effective} is not supported")
    algorithm_uri, overhead = scheme
    if not server_certificate:
        raise CertificateUnparseable("no server certificate to encrypt against")
    try:
        cert = x509.load_der_x509_certificate(server_certificate)
        public_key = cert.public_key()
    except Exception as exc:
        raise CertificateUnparseable(f"server certificate unparseable: {exc}") from None
    if not isinstance(public_key, rsa.RSAPublicKey):
        raise CertificateUnparseable("server certificate key is not RSA")
    if not server_nonce:
        raise CertificateUnparseable("server nonce required for password encryption")
    ciphertext = encrypt_legacy_password(
        password_bytes, server_nonce, public_key, algorithm_uri, overhead
    )
    return UserNameToken(
        policy_id=token_policy.policy_id,
        username=credential.username,
        password=ciphertext,
        encryption_algorithm_uri=algorithm_uri,
    )


def build_x509(
    endpoint,
    certificate_der: bytes,
    private_key: rsa.RSAPrivateKey,
    server_certificate: Optional[bytes],
    server_nonce: Optional[bytes],
) -> X509Token:
    """Certificate token with proof-of-possession over server cert + nonce."""
    candidates = _policies_of_type(endpoint, UserTokenType.CERTIFICATE)
    if not candidates:
        raise NoSuchPolicy("endpoint advertises no certificate token policy")
    token_policy = candidates[0]

    try:
        cert = x509.load_der_x509_certificate(certificate_der)
    except Exception as exc:
        raise CertificateUnparseable(f"client certificate unparseable: {exc}") from None
    own_public = private_key.public_key()
    if cert.public_key().public_numbers() != own_public.public_numbers():
        raise KeyMismatch("certificate public key does not match the private key")

    effective = effective_policy_uri(endpoint, token_policy)
    if policies.is_none_policy(effective):
        # No signature algorithm exists for the None policy; send an empty
        # proof. Servers that accept this are exactly the interesting ones.
        return X509Token(token_policy.policy_id, certificate_der, "", b"")
    algorithm_uri = _SIGNATURE_SCHEMES.get(effective)
    if algorithm_uri is None:
        raise PolicyUnsupportedForSigning(f"token policy {effective} is not supported")
    payload = (server_certificate or b"") + (server_nonce or b"")
    signature = sign_with_uri(private_key, payload, algorithm_uri)
    return X509Token(token_policy.policy_id, certificate_der, algorithm_uri, signature)


def sign_with_uri(private_key: rsa.RSAPrivateKey, payload: bytes, algorithm_uri: str) -> bytes:
    if algorithm_uri == policies.ALG_RSA_SHA1:
        return private_key.sign(payload, padding.PKCS1v15(), hashes.SHA1())
    if algorithm_uri == policies.ALG_RSA_SHA256:
        return private_key.sign(payload, padding.PKCS1v15(), hashes.SHA256())
    if algorithm_uri == policies.ALG_RSA_PSS_SHA256:
        return private_key.sign(
            payload,
            padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=32),
            hashes.SHA256(),
        )
    raise PolicyUnsupportedForSigning(f"no signature scheme for {algorithm_uri}")


def verify_with_uri(
    public_key: rsa.RSAPublicKey, payload: bytes, signature: bytes, algorithm_uri: str
) -> bool:
    try:
        if algorithm_uri == policies.ALG_RSA_SHA1:
            public_key.verify(signature, payload, padding.PKCS1v15(), hashes.SHA1())
        elif algorithm_uri == policies.ALG_RSA_SHA256:
            public_key.verify(signature, payload, padding.PKCS1v15(), hashes.SHA256())
        elif algorithm_uri == policies.ALG_RSA_PSS_SHA256:
            public_key.verify(
                signature,
                payload,
                padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=32),
                hashes.SHA256(),
            )
        else:
            return False
        return True
    except InvalidSignature:
        return False


def generate_self_signed(
    subject: str = "uascout client",
    key_bits: int = 2048,
    validity_days: int = 365,
    application_uri: Optional[str] = None,
    hostname: str = "localhost",
) -> Tuple[bytes, rsa.RSAPrivateKey]:
    """Fresh self-signed certificate; the SAN carries the application URI.

    Servers match the URI SAN against the client description, so both sides
    of this artifact embed uascout.APPLICATION_URI unless told otherwise.
    """
    if key_bits not in (2048, 3072, 4096):
        raise ValueError(f"key_bits must be 2048, 3072 or 4096, got {key_bits}")
    application_uri = application_uri or uascout.APPLICATION_URI
    key = rsa.generate_private_key(public_exponent=65537, key_size=key_bits)
    name = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, subject)])
    now = datetime.datetime.now(datetime.timezone.utc)
    san: List[x509.GeneralName] = [
        x509.UniformResourceIdentifier(application_uri),
    ]
    try:
        san.append(x509.IPAddress(ipaddress.ip_address(hostname)))
    except ValueError:
        san.append(x509.DNSName(hostname))
    cert = (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(minutes=5))
        .not_valid_after(now + datetime.timedelta(days=validity_days))
        .add_extension(x509.SubjectAlternativeName(san), critical=False)
        .add_extension(
            x509.KeyUsage(
                digital_signature=True,
                content_commitment=True,
                key_encipherment=True,
                data_encipherment=True,
                key_agreement=False,
                key_cert_sign=False,
                crl_sign=False,
                encipher_only=False,
                decipher_only=False,
            ),
            critical=True,
        )
        .add_extension(
            x509.ExtendedKeyUsage(
                [ExtendedKeyUsageOID.CLIENT_AUTH, ExtendedKeyUsageOID.SERVER_AUTH]
            ),
            critical=False,
        )
        .sign(key, hashes.SHA256())
    )
    return cert.public_bytes(serialization.Encoding.DER), key


def load_certificate_pem_or_der(raw: bytes) -> bytes:
    """Accept PEM or DER input, return DER."""
    if raw.lstrip().startswith(b"-----BEGIN"):
        return x509.load_pem_x509_certificate(raw).public_bytes(serialization.Encoding.DER)
    x509.load_der_x509_certificate(raw)  # validates
    return raw


def load_private_key_pem_or_der(raw: bytes) -> rsa.RSAPrivateKey:
    if raw.lstrip().startswith(b"-----BEGIN"):
        key = serialization.load_pem_private_key(raw, password=None)
    else:
        key = serialization.load_der_private_key(raw, password=None)
    if not isinstance(key, rsa.RSAPrivateKey):
        raise CertificateUnparseable("private key is not RSA")
    return key


def save_key_pem(key: rsa.RSAPrivateKey) -> bytes:
    return key.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )


def save_certificate_pem(der: bytes) -> bytes:
    return x509.load_der_x509_certificate(der).public_bytes(serialization.Encoding.PEM)


def load_credential_file(path, source: CredentialSource) -> List[Credential]:
    """username:password per line, UTF-8, # comments and blank lines ignored."""
    creds: List[Credential] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ValueError(f"{path}:{lineno}: expected username:password")
            username, _, password = line.partition(":")
            if not username:
                raise ValueError(f"{path}:{lineno}: empty username")
            creds.append(Credential(username, password, source))
    return creds
