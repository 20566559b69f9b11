"""Security policy URIs and short-name resolution."""

from __future__ import annotations

PREFIX = "http://opcfoundation.org/UA/SecurityPolicy#"

POLICY_NONE = PREFIX + "None"
POLICY_BASIC128RSA15 = PREFIX + "Basic128Rsa15"
POLICY_BASIC256 = PREFIX + "Basic256"
POLICY_BASIC256SHA256 = PREFIX + "Basic256Sha256"
POLICY_AES128_SHA256_RSAOAEP = PREFIX + "Aes128_Sha256_RsaOaep"
POLICY_AES256_SHA256_RSAPSS = PREFIX + "Aes256_Sha256_RsaPss"

SHORT_NAMES = {
    "None": POLICY_NONE,
    "Basic128Rsa15": POLICY_BASIC128RSA15,
    "Basic256": POLICY_BASIC256,
    "Basic256Sha256": POLICY_BASIC256SHA256,
    "Aes128_Sha256_RsaOaep": POLICY_AES128_SHA256_RSAOAEP,
    "Aes256_Sha256_RsaPss": POLICY_AES256_SHA256_RSAPSS,
}

TRANSPORT_PROFILE_BINARY = (
    "http://opcfoundation.org/UA-Profile/Transport/uatcp-uasc-uabinary"
)

# Algorithm URIs carried inside identity tokens.
ALG_RSA_15 = "http://www.w3.org/2001/04/xmlenc#rsa-1_5"
ALG_RSA_OAEP = "http://www.w3.org/2001/04/xmlenc#rsa-oaep"
ALG_RSA_OAEP_SHA256 = "http://opcfoundation.org/UA/security/rsa-oaep-sha2-256"
ALG_RSA_SHA1 = "http://www.w3.org/2000/09/xmldsig#rsa-sha1"
ALG_RSA_SHA256 = "http://www.w3.org/2001/04/xmldsig-more#rsa-sha256"
ALG_RSA_PSS_SHA256 = "http://opcfoundation.org/UA/security/rsa-pss-sha2-256"


def canonical_uri(name_or_uri: str) -> str:
    """Resolve a short policy name to its URI; full URIs pass through."""
    if name_or_uri in SHORT_NAMES:
        return SHORT_NAMES[name_or_uri]
    return name_or_uri


def is_none_policy(uri: str) -> bool:
    return uri == POLICY_NONE
