
from .errors import ConfigError, DomainError, NumericalError, RankMismatchError



def safe_call(fn, *args, method_name: str | None = None, **kwargs):
    """Run a check or computation and capture library errors as messages.

    Usage:
        success, report, error_msg = safe_call(run_check, cfg)

    Returns:
        tuple: (success: bool, result: Any, error_message: str|None)

    """
    if method_name is None:
        method_name = getattr(fn, "__name__", str(fn))

    try:
        return True, fn(*args, **kwargs), None

    except DomainError as e:
        error_msg = f"Domain error: {e}"
        if getattr(e, "last_valid", None) is not None:
            error_msg += f" (last valid sample {list(e.last_valid)})"
    except NumericalError as e:
        error_msg = f"Numerical issue: {e}"
    except RankMismatchError as e:
        error_msg = f"Rank mismatch: {e}"
    except ConfigError as e:
        error_msg = f"Config error: {e}"
    except Exception as e:
        error_msg = f"Unexpected error: {e}"

    print(f"⚠️ {method_name} failed: {error_msg}")
    return False, None, error_msg


def safe_call_for_suite(
    fn,
    *args,
    method_name: str | None = None,
    call_desc: str | None = None,
    **kwargs,
):
    """Like safe_call, but returns (description, result) for suite display.

    Failed calls come back as (description + " [ERROR]", {"error": message}).
    """
    if method_name is None:
        method_name = getattr(fn, "__name__", str(fn))

    if call_desc is None:
        args_str = ", ".join(str(arg) for arg in args)
        kwargs_str = ", ".join(f"{k}={v}" for k, v in kwargs.items())
        all_args = ", ".join(filter(None, [args_str, kwargs_str]))
        call_desc = f"{method_name}({all_args})"

    success, result, error_msg = safe_call(fn, *args, method_name=method_name, **kwargs)

    if success:
        return call_desc, result
    return f"{call_desc} [ERROR]", {"error": error_msg}
