from .fields import Grid, InvariantField, sample_field, surface_sample
from .laplacian import laplacian
from .identities import CheckReport, check_identity
