from stabilizer.exceptions import InvalidArgumentError


class NoFeasibleConfigError(InvalidArgumentError):
    """No layout in the search space yields a positive secret key rate."""
