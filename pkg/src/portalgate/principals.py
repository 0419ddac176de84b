"""Authenticated identities and the static token table.

Tokens stand in for the production deployment's ambient authentication; the
table maps each bearer token to exactly one Principal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Unauthenticated


@dataclass(frozen=True)
class Principal:
    """A user as seen by the authorization rules.

    groups always contains primary_gid; the constructor enforces it.
    """

    uid: int
    primary_gid: int
    groups: frozenset[int] = field(default_factory=frozenset)
    display_name: str = ""

    def __post_init__(self):
        if self.uid < 0 or self.primary_gid < 0 or any(g < 0 for g in self.groups):
            raise ValueError("uid and gids must be non-negative")
        object.__setattr__(self, "groups", frozenset(self.groups) | {self.primary_gid})


class UserTable:
    """token -> Principal lookup; at least one entry is required to serve."""

    def __init__(self, entries: dict[str, Principal]):
        if not entries:
            raise ValueError("user table must contain at least one entry")
        self._by_token = dict(entries)

    def resolve(self, token: str) -> Principal:
        try:
            return self._by_token[token]
        except KeyError:
            raise Unauthenticated("unknown token") from None

    def principals(self) -> list[Principal]:
        return list(self._by_token.values())


COOKIE_NAME = "portal_token"


def extract_token(authorization: str | None, cookie_header: str | None = None) -> str | None:
    """Pull the bearer token from an Authorization header or the portal cookie.

    The cookie carries the same static token so browser navigations (which
    cannot attach headers) can authenticate; it is not a session mechanism.
    """
    if authorization:
        scheme, _, rest = authorization.partition(" ")
        if scheme.lower() == "bearer" and rest.strip():
            return rest.strip()
    if cookie_header:
        for part in cookie_header.split(";"):
            name, _, value = part.strip().partition("=")
            if name == COOKIE_NAME and value:
                return value
    return None


def authenticate(users: UserTable, authorization: str | None, cookie_header: str | None = None) -> Principal:
    token = extract_token(authorization, cookie_header)
    if token is None:
        raise Unauthenticated("missing credentials")
    return users.resolve(token)
