"""Resolution authority: trace a pseudonym back to the LTC it was issued for.

Both identifiable-key links are recomputed from the material the authorities
reveal, so neither a PCA that points at the wrong ticket nor an LTCA that
points at the wrong LTC goes unnoticed.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass, field
from typing import Dict, Optional

from .errors import ChainMismatch
from .model import (
    Pseudonym,
    RevealPseudonymRequest,
    RevealPseudonymResponse,
    RevealTicketRequest,
    RevealTicketResponse,
    pseudonym_ik,
    ticket_ik,
    verify_message,
)
from .transport import call_once

PCA_LINK = "pca_link"
LTCA_LINK = "ltca_link"


@dataclass
class ResolutionResult:
    pseudonym_serial: int
    ticket_serial: int
    ltc_digest: bytes
    links: Dict[str, bool] = field(default_factory=dict)
    subject_id: Optional[bytes] = None

    @property
    def chain_valid(self) -> bool:
        return bool(self.links) and all(self.links.values())

    def as_dict(self) -> dict:
        return {
            "pseudonym_serial": self.pseudonym_serial,
            "ticket_serial": self.ticket_serial,
            "ltc_digest": self.ltc_digest.hex(),
            "subject_id": self.subject_id.hex() if self.subject_id else None,
            "chain_valid": self.chain_valid,
            "links": dict(self.links),
        }


def check_pca_link(p: Pseudonym, rev: RevealPseudonymResponse) -> bool:
    ik = pseudonym_ik(rev.ticket_ik, p.public_key, p.t_s, p.t_e, rev.rnd_ik)
    return hmac.compare_digest(ik, p.ik_p)


def check_ltca_link(pca_rev: RevealPseudonymResponse, rev: RevealTicketResponse,
                    ltca_public_key: Optional[bytes] = None) -> bool:
    t = rev.ticket
    if t.serial != pca_rev.ticket_serial or t.ik_tkt != pca_rev.ticket_ik:
        return False
    if ltca_public_key is not None and not verify_message(t, ltca_public_key):
        return False
    if rev.ltc.digest() != rev.ltc_digest:
        return False
    return hmac.compare_digest(ticket_ik(rev.ltc, t.t_s, t.t_e, rev.rnd_ik_tkt), t.ik_tkt)


async def resolve(pseudonym: Pseudonym, pca, ltca, credential: bytes, *,
                  pca_public_key: Optional[bytes] = None,
                  ltca_public_key: Optional[bytes] = None) -> ResolutionResult:
    """Walk pseudonym -> ticket -> LTC; raise :class:`ChainMismatch` at the first broken link."""
    if pca_public_key is not None and not verify_message(pseudonym, pca_public_key):
        raise ChainMismatch("pseudonym_signature")
    pca_rev = await call_once(pca, RevealPseudonymRequest(pseudonym.serial, credential))
    result = ResolutionResult(pseudonym.serial, pca_rev.ticket_serial, b"")
    result.links[PCA_LINK] = check_pca_link(pseudonym, pca_rev)
    if not result.links[PCA_LINK]:
        raise ChainMismatch(PCA_LINK, result)
    ltca_rev = await call_once(ltca, RevealTicketRequest(pca_rev.ticket_serial, credential))
    result.ltc_digest = ltca_rev.ltc_digest
    result.subject_id = ltca_rev.ltc.subject_id
    result.links[LTCA_LINK] = check_ltca_link(pca_rev, ltca_rev, ltca_public_key)
    if not result.links[LTCA_LINK]:
        raise ChainMismatch(LTCA_LINK, result)
    return result
