"""String-form rules for discovering PI-related pairs."""

import json
import logging
import re
from importlib.resources import files
from pathlib import Path

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from service.errors import ConfigError, MissingInputError

logger = logging.getLogger(__name__)


class TypeRules(BaseModel):
    """Keywords and value regexes of one PI type, as stored in a rule file."""

    keywords: list[str] = []
    regexes: list[str] = []


class RuleSet(BaseModel):
    """Keyword and regex rules keyed by PI type.

    Keywords match the whole lowercased key. Regexes must match the whole value.
    """

    keyword_rules: dict[str, set[str]] = {}
    regex_rules: dict[str, list[str]] = {}

    @field_validator("keyword_rules")
    @classmethod
    def lowercase_keywords(cls, value: dict[str, set[str]]) -> dict[str, set[str]]:
        """Store keywords lowercased."""
        return {pi_type: {k.lower() for k in keywords} for pi_type, keywords in value.items()}

    @field_validator("regex_rules")
    @classmethod
    def regexes_compile(cls, value: dict[str, list[str]]) -> dict[str, list[str]]:
        """Reject patterns that do not compile."""
        for pi_type, patterns in value.items():
            for pattern in patterns:
                try:
                    re.compile(pattern)
                except re.error as e:
                    raise ValueError(f"{pi_type}: bad regex {pattern!r}: {e}") from e
        return value

    @model_validator(mode="after")
    def every_type_has_a_rule(self) -> "RuleSet":
        """Each declared PI type needs at least one keyword or regex."""
        for pi_type in self.pi_types():
            if not self.keyword_rules.get(pi_type) and not self.regex_rules.get(pi_type):
                raise ValueError(f"PI type {pi_type!r} declares no rules")
        return self

    def pi_types(self) -> list[str]:
        """Return the declared PI types in sorted order."""
        return sorted(self.keyword_rules.keys() | self.regex_rules.keys())

    def compiled(self) -> list[tuple[str, re.Pattern[str]]]:
        """Return (pi_type, compiled regex) pairs in PI-type order."""
        return [
            (pi_type, re.compile(pattern))
            for pi_type in self.pi_types()
            for pattern in self.regex_rules.get(pi_type, [])
        ]

    def keyword_type(self, key: str) -> str | None:
        """Return the first PI type whose keywords contain the lowercased key."""
        lowered = key.lower()
        for pi_type in self.pi_types():
            if lowered in self.keyword_rules.get(pi_type, set()):
                return pi_type
        return None

    @classmethod
    def from_file_dict(cls, data: dict[str, dict]) -> "RuleSet":
        """Build a rule set from the rule file layout {type: {keywords, regexes}}."""
        per_type = {pi_type: TypeRules.model_validate(rules) for pi_type, rules in data.items()}
        return cls(
            keyword_rules={t: set(r.keywords) for t, r in per_type.items()},
            regex_rules={t: list(r.regexes) for t, r in per_type.items()},
        )


def load_rule_set(path: Path | None = None) -> RuleSet:
    """Load a rule file, or the shipped default rules when path is None.

    Raises:
        MissingInputError: If path does not exist.
        ConfigError: If the file is not a valid rule set.

    """
    if path is None:
        text = files("service.resources").joinpath("default_rules.json").read_text("utf-8")
        source = "shipped defaults"
    else:
        if not path.exists():
            raise MissingInputError(f"Rule file not found: {path}")
        text = path.read_text(encoding="utf-8")
        source = str(path)
    try:
        rules = RuleSet.from_file_dict(json.loads(text))
    except (json.JSONDecodeError, ValidationError, AttributeError) as e:
        raise ConfigError(f"Invalid rule file {source}: {e}") from e
    logger.info("✓ Loaded rules for %d PI types from %s", len(rules.pi_types()), source)
    return rules
