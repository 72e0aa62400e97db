from stabilizer.exceptions import InvalidArgumentError


class UnsupportedDepthError(InvalidArgumentError):
    """The operation is only defined for a specific tree depth."""
