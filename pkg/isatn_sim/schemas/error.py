from pydantic import BaseModel
from typing import Optional
from enum import Enum

class ErrorCode(str, Enum):
    # Configuration errors
    PARSE_ERROR = "PARSE_ERROR"
    VALIDATION_ERROR = "VALIDATION_ERROR"
    CONFIG_ERROR = "CONFIG_ERROR"
    USAGE_ERROR = "USAGE_ERROR"

    # Trace errors
    GAP_ERROR = "GAP_ERROR"
    RANGE_ERROR = "RANGE_ERROR"
    OUT_OF_RANGE = "OUT_OF_RANGE"

    # Model errors
    INVALID_PARAMETER = "INVALID_PARAMETER"
    INVALID_MODE = "INVALID_MODE"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    HORIZON_MISMATCH = "HORIZON_MISMATCH"
    INSUFFICIENT_HISTORY = "INSUFFICIENT_HISTORY"
    INFEASIBLE = "INFEASIBLE"

    # Metric errors
    ZERO_TRAFFIC = "ZERO_TRAFFIC"
    EMPTY_RUN = "EMPTY_RUN"
    EVENT_NOT_FOUND = "EVENT_NOT_FOUND"

    # Run errors
    MISSING_POLICY_FILE = "MISSING_POLICY_FILE"
    IO_ERROR = "IO_ERROR"
    SERVER_ERROR = "SERVER_ERROR"

class ErrorDetail(BaseModel):
    code: ErrorCode
    message: str
    details: Optional[str] = None
    field: Optional[str] = None
    suggestions: Optional[list[str]] = None

class ErrorResponse(BaseModel):
    error: ErrorDetail
    timestamp: str
    run_id: Optional[str] = None

# Messages shown when the raising site gives none
ERROR_MESSAGES = {
    ErrorCode.PARSE_ERROR: {
        "message": "Input file could not be parsed",
        "details": "The file is not valid JSON or CSV in the documented format",
        "suggestions": ["Check the file against the documented schema"]
    },
    ErrorCode.VALIDATION_ERROR: {
        "message": "Scenario failed validation",
        "details": "One or more scenario invariants do not hold",
        "suggestions": ["Run `validate --scenario <path>` to list every violation"]
    },
    ErrorCode.GAP_ERROR: {
        "message": "Carbon trace has a gap",
        "details": "Every (hour, region) pair must be present, hours contiguous from 0",
        "suggestions": ["Fill the missing hour or regenerate the trace"]
    },
    ErrorCode.RANGE_ERROR: {
        "message": "Carbon trace value out of range",
        "details": "renewable_fraction must lie in [0, 1] and intensity must be non-negative",
        "suggestions": ["Check the offending row"]
    },
    ErrorCode.MISSING_POLICY_FILE: {
        "message": "Trained policy file not found",
        "details": "The mpc_rl policy needs trained actor-critic weights",
        "suggestions": ["Run `train-rl --scenario <path> --out <policy file>` first"]
    },
    ErrorCode.ZERO_TRAFFIC: {
        "message": "No traffic delivered",
        "details": "gCO2/GB is undefined when no bits were delivered",
        "suggestions": None
    },
    ErrorCode.IO_ERROR: {
        "message": "Output could not be written",
        "details": "The output directory is missing or not writable",
        "suggestions": ["Check the --out path"]
    },
    ErrorCode.SERVER_ERROR: {
        "message": "Unexpected error",
        "details": "The run stopped on an unexpected exception",
        "suggestions": ["Re-run with ISATN_LOG_LEVEL=DEBUG"]
    }
}

def create_error_response(
    error_code: ErrorCode,
    custom_message: Optional[str] = None,
    custom_details: Optional[str] = None,
    field: Optional[str] = None,
    run_id: Optional[str] = None
) -> ErrorResponse:
    """Create a standardized error payload"""
    from datetime import datetime, timezone

    error_info = ERROR_MESSAGES.get(error_code, {
        "message": "An error occurred",
        "details": None,
        "suggestions": None
    })

    error_detail = ErrorDetail(
        code=error_code,
        message=custom_message or error_info["message"],
        details=custom_details or error_info["details"],
        field=field,
        suggestions=error_info.get("suggestions")
    )

    return ErrorResponse(
        error=error_detail,
        timestamp=datetime.now(timezone.utc).isoformat(),
        run_id=run_id
    )
