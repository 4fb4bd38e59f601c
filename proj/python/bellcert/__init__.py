"""P-value bounds for Bell tests against local hidden-variable models."""

from ._bellcert import (  # noqa: F401
    CapExceededError,
    Game,
    InputError,
    PreconditionError,
    azuma_pvalue,
    bentkus_pvalue,
    beta_win,
    binom_tail,
    cglmp,
    chi2_tail_even,
    chsh,
    chsh_beta_win,
    classical_bound,
    fisher_combine,
    interp_binom_tail,
    log_binom_tail,
    mcdiarmid_pvalue,
    mermin,
    winlose_pvalue,
)

__version__ = "0.1.0"
