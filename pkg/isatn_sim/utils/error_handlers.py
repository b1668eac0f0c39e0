import logging
import sys
import uuid
from typing import Optional

from ..schemas.error import ErrorCode, create_error_response

logger = logging.getLogger(__name__)

# Usage and configuration failures exit 2, everything else exits 1
EXIT_CODE_MAP = {
    ErrorCode.USAGE_ERROR: 2,
    ErrorCode.PARSE_ERROR: 2,
    ErrorCode.VALIDATION_ERROR: 2,
    ErrorCode.CONFIG_ERROR: 2,
}

class SimulationError(Exception):
    """Base error with a structured error code"""
    error_code = ErrorCode.SERVER_ERROR

    def __init__(
        self,
        message: str = None,
        details: str = None,
        field: Optional[str] = None,
        error_code: ErrorCode = None
    ):
        if error_code is not None:
            self.error_code = error_code
        self.custom_message = message
        self.custom_details = details
        self.field = field
        super().__init__(message or self.error_code.value)

    @property
    def exit_code(self) -> int:
        return EXIT_CODE_MAP.get(self.error_code, 1)

class ParseError(SimulationError):
    error_code = ErrorCode.PARSE_ERROR

class ValidationError(SimulationError):
    error_code = ErrorCode.VALIDATION_ERROR

    def __init__(self, message: str = None, violations: list[str] = None, **kwargs):
        self.violations = list(violations or [])
        if message is None and self.violations:
            message = "; ".join(self.violations)
        super().__init__(message, **kwargs)

class ConfigError(SimulationError):
    error_code = ErrorCode.CONFIG_ERROR

class UsageError(SimulationError):
    error_code = ErrorCode.USAGE_ERROR

class GapError(SimulationError):
    error_code = ErrorCode.GAP_ERROR

class RangeError(SimulationError):
    error_code = ErrorCode.RANGE_ERROR

class OutOfRange(SimulationError):
    error_code = ErrorCode.OUT_OF_RANGE

class InvalidParameter(SimulationError):
    error_code = ErrorCode.INVALID_PARAMETER

class InvalidMode(SimulationError):
    error_code = ErrorCode.INVALID_MODE

class DimensionMismatch(SimulationError):
    error_code = ErrorCode.DIMENSION_MISMATCH

class HorizonMismatch(SimulationError):
    error_code = ErrorCode.HORIZON_MISMATCH

class InsufficientHistory(SimulationError):
    error_code = ErrorCode.INSUFFICIENT_HISTORY

class ZeroTraffic(SimulationError):
    error_code = ErrorCode.ZERO_TRAFFIC

class EmptyRun(SimulationError):
    error_code = ErrorCode.EMPTY_RUN

class EventNotFound(SimulationError):
    error_code = ErrorCode.EVENT_NOT_FOUND

class MissingPolicyFile(SimulationError):
    error_code = ErrorCode.MISSING_POLICY_FILE

class IoError(SimulationError):
    error_code = ErrorCode.IO_ERROR

def handle_cli_error(exc: Exception, run_id: str = None) -> int:
    """Log the failure, write the JSON payload to stderr and return the exit code"""
    run_id = run_id or str(uuid.uuid4())

    if isinstance(exc, SimulationError):
        logger.warning(f"{exc.error_code.value}: {exc.custom_message} (Run ID: {run_id})")
        payload = create_error_response(
            error_code=exc.error_code,
            custom_message=exc.custom_message,
            custom_details=exc.custom_details,
            field=exc.field,
            run_id=run_id
        )
        exit_code = exc.exit_code
    else:
        logger.error(f"Unexpected error: {type(exc).__name__}: {str(exc)} (Run ID: {run_id})", exc_info=True)
        payload = create_error_response(
            error_code=ErrorCode.SERVER_ERROR,
            custom_details=f"{type(exc).__name__}: {exc}",
            run_id=run_id
        )
        exit_code = 1

    print(payload.json(exclude_none=True), file=sys.stderr)
    return exit_code
