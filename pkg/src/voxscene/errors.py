"""Exceptions shared by the voxel-processing modules."""


class ParameterOutOfRange(ValueError):
    """A numeric argument violates its documented range."""
