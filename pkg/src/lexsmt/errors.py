"""Exception types shared across the toolkit."""


class LexsmtError(Exception):
    """Base class for all toolkit errors."""


class CorpusAlignmentError(LexsmtError):
    """Source and target files disagree on line count."""

    def __init__(self, source_lines, target_lines):
        self.source_lines = source_lines
        self.target_lines = target_lines
        super().__init__(
            f"line count mismatch: source has {source_lines} lines, "
            f"target has {target_lines} lines"
        )


class CorpusEncodingError(LexsmtError):
    """A corpus file contains bytes that are not valid UTF-8."""

    def __init__(self, path, line_number):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}: invalid UTF-8 at line {line_number}")


class PatchError(LexsmtError):
    """A patch references pair ids that do not exist in the corpus."""

    def __init__(self, unmatched_ids):
        self.unmatched_ids = sorted(unmatched_ids)
        super().__init__(
            "patch ids not present in corpus: "
            + ", ".join(str(i) for i in self.unmatched_ids)
        )


class RuleTableError(LexsmtError):
    """A suffix rule table failed validation."""


class ResourceFormatError(LexsmtError):
    """A lexical resource file is malformed."""


class TrainingError(LexsmtError):
    """A model cannot be trained from the given input."""


class ContractError(LexsmtError):
    """Arguments violate an interface contract."""


class ConfigurationError(LexsmtError):
    """An experiment configuration is invalid or incomplete."""
