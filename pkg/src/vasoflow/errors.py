"""Exception types shared across the package."""


class NetworkValidationError(ValueError):
    """A network violates a structural invariant (connectivity, radii, ...)."""


class SchemaError(NetworkValidationError):
    """A network or scenario file does not conform to the on-disk schema.

    The message carries a location ("edges[3].radius2", ...) so bad files can
    be fixed without reading the parser.
    """

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


class MeshError(ValueError):
    """Invalid meshing request or inconsistent mesh/space pairing."""


class SingularSystemError(RuntimeError):
    """The assembled system is rank deficient.

    Typical cause: no pressure boundary condition anywhere, which leaves the
    pressure (and vertex multipliers) defined only up to a constant.
    """
