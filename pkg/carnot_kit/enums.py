from enum import IntEnum
from enum import StrEnum


class LawTypeEnum(StrEnum):
    BILINEAR = "bilinear"
    ENGEL = "engel"


class BuiltinGroupEnum(StrEnum):
    HEISENBERG = "heisenberg"
    RXH = "rxh"
    ENGEL = "engel"
    ABELIAN3 = "abelian3"


class BackendEnum(StrEnum):
    EXACT = "exact"
    SHOOTING = "shooting"
    ORACLE = "oracle"


class EndpointMethodEnum(StrEnum):
    EXACT = "exact"
    RK4 = "rk4"


class VerdictEnum(StrEnum):
    BOUNDED = "bounded"
    BLOWUP = "blowup"
    INCONCLUSIVE = "inconclusive"


class FieldNameEnum(StrEnum):
    D0SQ = "d0sq"
    D0 = "d0"
    NEG_D0SQ = "neg_d0sq"
    D0_CUBED = "d0cubed"
    DIST_TO_SET_SQ = "dist_to_set_sq"


class PhiKindEnum(StrEnum):
    POWER = "power"
    QUADRATIC = "quadratic"
    TABULATED = "tabulated"


class InitialDatumKindEnum(StrEnum):
    CONSTANT = "constant"
    DISTANCE = "distance"
    POINT_CLOUD = "point_cloud"
    TABLE = "table"


class CheckStatusEnum(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


class ProvenanceEnum(StrEnum):
    PAPER = "paper"
    TRIVIAL = "trivial"
    DERIVED = "derived"


class ReportFormatEnum(StrEnum):
    JSON = "json"
    CSV = "csv"


class SuiteEnum(StrEnum):
    CORE = "core"
    HEISENBERG = "heisenberg"
    PAPER = "paper"


class ExitCodeEnum(IntEnum):
    OK = 0
    SOLVER_FAILURE = 2
    EXPECTATION_CONTRADICTED = 3
    BAD_CONFIG = 4
