"""Exception hierarchy shared across the package."""


class ScopeMatchError(Exception):
    """Base class for all package-specific errors."""


# --- image / file IO ---

class UnreadableFile(ScopeMatchError):
    pass


class UnsupportedFormat(ScopeMatchError):
    pass


class EmptyImage(ScopeMatchError):
    pass


# --- backend ---

class BackendUnavailable(ScopeMatchError):
    pass


class InvalidStep(ScopeMatchError):
    pass


class ShapeMismatch(ScopeMatchError):
    pass


# --- conditioning ---

class DegenerateBox(ScopeMatchError):
    pass


class EmptyList(ScopeMatchError):
    pass


class MixedOrigin(ScopeMatchError):
    pass


# --- matching ---

class NoCrossLayers(ScopeMatchError):
    pass


class NoSelfLayers(ScopeMatchError):
    pass


# --- heads ---

class UntrainedState(ScopeMatchError):
    pass


# --- tracking ---

class NoObjects(ScopeMatchError):
    pass


class EmptyFrame(ScopeMatchError):
    pass


class InconsistentShapes(ScopeMatchError):
    pass


# --- training ---

class DotOutOfBounds(ScopeMatchError):
    pass


class DegenerateMask(ScopeMatchError):
    pass


class EmptyDataset(ScopeMatchError):
    pass


class DivergedLoss(ScopeMatchError):
    pass


# --- metrics ---

class FrameMismatch(ScopeMatchError):
    pass


# --- harness ---

class SamplingExhausted(ScopeMatchError):
    pass


class ManifestError(ScopeMatchError):
    pass
