"""Revenue-maximizing menus of information products for buyers with correlated states."""
from .continuum import ContinuumEconomy, MenuSchedule, check_c2, solve_menu, solve_posted_price
from .prior import ChainParams, DomainError, TwoTypePrior, transition
from .two_type import TwoTypeEconomy, TwoTypeMenu, solve
from .valuation import Experiment, MenuItem, cross_value, own_value

__all__ = [
    "ChainParams", "ContinuumEconomy", "DomainError", "Experiment", "MenuItem", "MenuSchedule",
    "TwoTypeEconomy", "TwoTypeMenu", "TwoTypePrior", "check_c2", "cross_value", "own_value",
    "solve", "solve_menu", "solve_posted_price", "transition",
]
