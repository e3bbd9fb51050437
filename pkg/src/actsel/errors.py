"""Exception hierarchy.

Every error raised by the package derives from :class:`ActselError`. The CLI
maps the three broad families onto exit codes: :class:`ConfigError` -> 2,
:class:`ValidationError` -> 3, :class:`TeacherError` -> 4.
"""


class ActselError(Exception):
    pass


class ConfigError(ActselError):
    pass


class ValidationError(ActselError):
    pass


# --- seed corpus / templates -------------------------------------------------


class MalformedLine(ValidationError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: malformed JSON object{': ' + reason if reason else ''}")


class MissingField(ValidationError):
    def __init__(self, field, line_no):
        self.field = field
        self.line_no = line_no
        super().__init__(f"line {line_no}: missing or invalid field {field!r}")


class DuplicateItemId(ValidationError):
    def __init__(self, item_id):
        self.item_id = item_id
        super().__init__(f"duplicate item_id {item_id!r}")


class EmptyDataset(ValidationError):
    def __init__(self, what="seed dataset"):
        super().__init__(f"{what} is empty")


class TooFewTemplates(ValidationError):
    def __init__(self, found, required=5):
        self.found = found
        self.required = required
        super().__init__(f"found {found} query templates, need at least {required}")


# --- embeddings ----------------------------------------------------------------


class MissingId(ValidationError):
    def __init__(self, item_id):
        self.item_id = item_id
        super().__init__(f"no embedding for item_id {item_id!r}")


class DimMismatch(ValidationError):
    def __init__(self, row, found, expected):
        self.row = row
        self.found = found
        self.expected = expected
        super().__init__(f"row {row}: dimension {found}, expected {expected}")


class NonFiniteValue(ValidationError):
    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value at row {row}, column {col}")


class MissingAux(ValidationError):
    def __init__(self, mode):
        super().__init__(f"fusion mode {mode!r} needs an auxiliary embedding matrix")


class DimMismatchForSum(ValidationError):
    def __init__(self, d_review, d_aux):
        super().__init__(f"weighted_sum needs equal dims, got {d_review} and {d_aux}")


class IdMisalignment(ValidationError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"item ids differ at row {row}")


# --- clustering / selection -------------------------------------------------------


class KExceedsN(ValidationError):
    def __init__(self, k, n):
        super().__init__(f"K={k} must satisfy 1 <= K <= N={n}")


class LengthMismatch(ValidationError):
    def __init__(self, a, b):
        super().__init__(f"distribution lengths differ: {a} vs {b}")


class EmptyRemaining(ActselError):
    def __init__(self):
        super().__init__("no candidates remain")


class BudgetExceedsPool(ValidationError):
    def __init__(self, budget, pool):
        self.budget = budget
        self.pool = pool
        super().__init__(f"budget {budget} exceeds candidate pool of {pool}")


# --- teacher / synthesis -----------------------------------------------------------


class WrongCardinality(ValidationError):
    def __init__(self, what, found, expected):
        super().__init__(f"expected exactly {expected} {what}, got {found}")


class EmptyConversation(ValidationError):
    def __init__(self):
        super().__init__("conversation text is empty")


class TeacherError(ActselError):
    pass


class AuthError(TeacherError):
    def __init__(self, status):
        self.status = status
        super().__init__(f"teacher endpoint rejected credentials (HTTP {status})")


class MalformedResponse(TeacherError):
    pass


class TransportError(TeacherError):
    pass


class TeacherTimeout(TransportError):
    pass


class RetryableStatus(TeacherError):
    def __init__(self, status):
        self.status = status
        super().__init__(f"HTTP {status}")


class Exhausted(TeacherError):
    def __init__(self, attempts, last_error=None):
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"teacher call failed after {attempts} attempts: {last_error}")


class TooFewTitles(TeacherError):
    """Raised by the title parser; counted as a teacher failure by synthesis."""

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"parsed {found} titles, expected {expected}")


# --- evaluation ----------------------------------------------------------------------


class EmptyRecords(ValidationError):
    def __init__(self):
        super().__init__("no evaluation records")


class UnmatchedIds(ValidationError):
    def __init__(self, pred_only, ref_only):
        self.pred_only = sorted(pred_only)
        self.ref_only = sorted(ref_only)
        super().__init__(
            f"ids without a reference: {self.pred_only}; ids without a prediction: {self.ref_only}"
        )
