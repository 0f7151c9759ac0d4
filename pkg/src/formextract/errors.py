"""Exception hierarchy; each class carries the CLI exit code for its error family."""

from __future__ import annotations


class FormExtractError(Exception):
    exit_code = 1


class ConfigError(FormExtractError):
    exit_code = 1


class SchemaError(ConfigError):
    pass


class ManifestError(ConfigError):
    pass


class StorageError(FormExtractError):
    """Reading or writing a file failed."""

    exit_code = 2


class ImageError(StorageError):
    pass


class ProviderError(FormExtractError):
    exit_code = 3


class AuthenticationError(ProviderError):
    pass


class RequestRejectedError(ProviderError):
    pass


class RateLimitError(ProviderError):
    pass


class TransportError(ProviderError):
    pass


class ProviderTimeoutError(ProviderError):
    pass


class MissingFixtureError(ProviderError):
    pass


class ParseError(FormExtractError):
    exit_code = 4


class CoverageError(FormExtractError):
    exit_code = 5


class MissingKeysError(CoverageError):
    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__(f"response is missing {len(self.missing)} schema key(s): {', '.join(self.missing)}")
