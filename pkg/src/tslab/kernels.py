"""Backend selection for the hot per-round kernels.

The compiled extension is preferred; set ``TSLAB_BACKEND=python`` to force
the numpy fallback (both expose the same functions).
"""
import os

_choice = os.environ.get("TSLAB_BACKEND", "auto").lower()

if _choice == "python":
    from tslab import _pykernels as _impl
else:
    try:
        from tslab import _ckernels as _impl
    except ImportError:
        if _choice == "cython":
            raise
        from tslab import _pykernels as _impl

BACKEND = _impl.BACKEND

rank_one_update = _impl.rank_one_update
sherman_morrison_update = _impl.sherman_morrison_update
cholesky_factor = _impl.cholesky_factor
cholesky_rank_one_update = _impl.cholesky_rank_one_update
solve_lower = _impl.solve_lower
solve_lower_t = _impl.solve_lower_t
cho_solve = _impl.cho_solve
mvn_draw = _impl.mvn_draw
quad_widths = _impl.quad_widths
inverse_residual = _impl.inverse_residual

__all__ = [
    "BACKEND",
    "rank_one_update",
    "sherman_morrison_update",
    "cholesky_factor",
    "cholesky_rank_one_update",
    "solve_lower",
    "solve_lower_t",
    "cho_solve",
    "mvn_draw",
    "quad_widths",
    "inverse_residual",
]
