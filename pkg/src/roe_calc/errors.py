"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Input is malformed: wrong shapes, unknown labels, mismatched spaces."""


class SchemaError(StructuralError):
    """A JSON document does not follow the expected schema."""


class PositivityViolation(StructuralError):
    """A glue metric puts a point of X at distance <= 0 from a point of Y."""

    def __init__(self, x, y, value):
        self.witness = (x, y)
        self.value = value
        super().__init__(f"cross distance d({x!r}, {y!r}) = {value} is not positive")


class EmptySupportError(ValueError):
    """A partial map or composite ended up with an empty support."""
