"""Counterdiabatic driving built from integrable flows.

Modules
-------
field       grids, spectral derivatives, operator matrices and invariant residuals
spacetime   space-time fields with analytic derivative jets (tau functions, wells)
kdv         KdV solitons, superpotentials and counterdiabatic operators
tdse        split-step and RK4 propagation of the driven Schrodinger equation
toda        open and truncated Toda flows and their closed forms
xy          XY spin-chain sectors driven by Toda couplings
extensions  generalized XY invariants and nonisospectral (scaling) driving
"""
from .errors import LaxShortcutsError
from .field import Grid1D, OperatorMatrix, Wavefunction
from .kdv import DEMO_PARAMS, SolitonParams, double_soliton, single_soliton
from .toda import TodaState, integrate_toda, n3_closed_form, toda_single_soliton

__all__ = [
    "LaxShortcutsError", "Grid1D", "OperatorMatrix", "Wavefunction", "DEMO_PARAMS", "SolitonParams",
    "double_soliton", "single_soliton", "TodaState", "integrate_toda", "n3_closed_form",
    "toda_single_soliton",
]

__version__ = "0.1.0"
