"""
Certificate assembly.

``certify`` turns a posterior, a prior, an optional interpolation measure η and
a Lipschitz estimate into a ``BoundReport``: every ingredient is recorded in
``terms``, the δ ledger is attached, and ``report.recompute()`` re-evaluates
the family's formula from ``terms`` alone.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from src import config
from src.bounds.budget import (
    DeltaLedger,
    LedgerEntry,
    compose_delta_budget,
    lambda_grid_penalty,
    prior_variance_penalty,
)
from src.bounds.gaps import (
    BoundError,
    catoni_fast_rate,
    catoni_gap,
    hellinger_gap,
    kl_inverse_bound,
    kl_wass_gap,
    mcallester_gap,
    reverse_kl_gap,
    supermartingale_gap,
    tv_gap,
)
from src.bounds.heavy_tail import student_bound
from src.data_loader import Dataset
from src.lipschitz import LipschitzEstimate, lipschitz_for_squared_gap
from src.measures import (
    DiracMeasure,
    GaussianMeasure,
    PosteriorMeasure,
    kl_gaussian,
    reverse_kl,
    squared_hellinger,
    tv_upper,
    w1_dirac_to_gaussian,
    w2_gaussian,
)
from src.models import ModelParams, ModelShape, empirical_risk, example_losses
from src.models.network import frobenius_norms
from src.utils.validation import validate_delta

__all__ = [
    "BoundFamily",
    "CertificationError",
    "RiskEstimate",
    "EtaChoice",
    "BoundReport",
    "evaluate_terms",
    "mc_expected_risk",
    "wasserstein_to",
    "interpolate_eta",
    "optimise_eta",
    "certify",
    "certify_student",
]


class BoundFamily(str, Enum):
    MCALLESTER = "mcallester"
    KL_WASSERSTEIN = "kl-wass"
    REVERSE_KL = "reverse-kl"
    HELLINGER = "hellinger"
    TV = "tv"
    CATONI = "catoni"
    SUPERMARTINGALE = "supermartingale"
    CATONI_FAST_RATE = "catoni-fast"
    STUDENT = "student"
    KL_INVERSE = "kl-inverse"


# Families whose certificate carries a Lipschitz·Wasserstein term
IPM_FAMILIES = frozenset(
    {
        BoundFamily.KL_WASSERSTEIN,
        BoundFamily.REVERSE_KL,
        BoundFamily.HELLINGER,
        BoundFamily.TV,
        BoundFamily.CATONI,
        BoundFamily.SUPERMARTINGALE,
        BoundFamily.CATONI_FAST_RATE,
    }
)
LAMBDA_FAMILIES = frozenset(
    {BoundFamily.CATONI, BoundFamily.SUPERMARTINGALE, BoundFamily.CATONI_FAST_RATE}
)


class CertificationError(ValueError):
    """Incompatible family/posterior combination or inconsistent ingredients."""

    pass


class RiskEstimate(NamedTuple):
    mean: float
    correction: float
    samples: int

    @property
    def value(self) -> float:
        return self.mean + self.correction


class EtaChoice(NamedTuple):
    eta: GaussianMeasure
    lam: float
    gap: float


@dataclass
class BoundReport:
    """One certificate: family, ingredients, δ ledger and final value."""

    family: BoundFamily
    terms: dict[str, float]
    delta_ledger: DeltaLedger
    value: float
    m: int
    notes: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.delta_ledger.delta

    def recompute(self) -> float:
        return evaluate_terms(self.family, self.terms, self.m)

    def to_dict(self) -> dict:
        return {
            "schema_version": config.REPORT_SCHEMA_VERSION,
            "family": self.family.value,
            "m": self.m,
            "delta": self.delta,
            "delta_ledger": self.delta_ledger.to_list(),
            "terms": {key: float(val) for key, val in self.terms.items()},
            "value": float(self.value),
            "notes": list(self.notes),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "BoundReport":
        ledger = DeltaLedger(
            float(payload["delta"]),
            tuple(LedgerEntry(e["purpose"], float(e["share"])) for e in payload["delta_ledger"]),
        )
        return cls(
            family=BoundFamily(payload["family"]),
            terms={key: float(val) for key, val in payload["terms"].items()},
            delta_ledger=ledger,
            value=float(payload["value"]),
            m=int(payload["m"]),
            notes=list(payload.get("notes", [])),
            provenance=dict(payload.get("provenance", {})),
        )


def evaluate_terms(family: BoundFamily, terms: dict[str, float], m: int) -> float:
    """
    The family's formula evaluated from recorded ingredients.

    Every family reads ``risk_term`` (empirical risk plus any Monte-Carlo
    correction), ``delta_bound`` and ``log_surcharge``.
    """
    risk = terms["risk_term"]
    delta = terms["delta_bound"]
    surcharge = terms["log_surcharge"]

    if family is BoundFamily.MCALLESTER:
        return risk + mcallester_gap(terms["kl"], m, delta, surcharge)
    if family is BoundFamily.KL_INVERSE:
        return kl_inverse_bound(risk, terms["kl"], m, delta, surcharge)
    if family is BoundFamily.KL_WASSERSTEIN:
        return risk + kl_wass_gap(
            terms["lipschitz"], terms["wasserstein"], terms["kl"], m, delta, surcharge
        )
    if family is BoundFamily.REVERSE_KL:
        return risk + reverse_kl_gap(terms["w_gamma"], terms["reverse_kl"], m, delta, surcharge)
    if family is BoundFamily.HELLINGER:
        return risk + hellinger_gap(terms["w_gamma"], terms["hellinger"], m, delta, surcharge)
    if family is BoundFamily.TV:
        return risk + tv_gap(terms["w_gamma"], terms["tv"], m, delta, surcharge)
    if family is BoundFamily.CATONI:
        return risk + catoni_gap(
            terms["lipschitz"], terms["wasserstein"], terms["kl"], terms["lambda"], m, delta,
            surcharge,
        )
    if family is BoundFamily.SUPERMARTINGALE:
        return risk + supermartingale_gap(
            terms["lipschitz"],
            terms["wasserstein"],
            terms["kl"],
            terms["lambda"],
            m,
            delta,
            second_moment=terms["second_moment"],
            log_surcharge=surcharge,
            divergence_scale=terms["divergence_scale"],
        )
    if family is BoundFamily.CATONI_FAST_RATE:
        return catoni_fast_rate(
            risk, terms["lipschitz"], terms["wasserstein"], terms["kl"], terms["lambda"], m,
            delta, surcharge,
        )
    if family is BoundFamily.STUDENT:
        return risk + student_bound(
            terms["lipschitz"], terms["sigma"], terms["f_pd"], terms["mean_dist_sq"], m, delta
        )
    raise CertificationError(f"unknown bound family {family!r}")


def mc_expected_risk(
    posterior: PosteriorMeasure,
    shape: ModelShape,
    data: Dataset,
    n_samples: int = config.MC_RISK_SAMPLES,
    delta: float = config.DEFAULT_DELTA,
    seed: int = config.RANDOM_SEED,
    alpha: float | None = None,
    strict: bool = False,
) -> RiskEstimate:
    """
    Monte-Carlo estimate of E_ρ R̂_S(h) with a one-sided Hoeffding correction.

    Returns the mean over ``n_samples`` posterior draws plus √(2 ln(1/δ)/T);
    ``strict`` switches to the tighter √(ln(1/δ)/(2T)). A Dirac posterior gives
    its exact empirical risk with zero correction.

    Raises:
        CertificationError: If n_samples < 1
    """
    if isinstance(posterior, DiracMeasure):
        params = ModelParams(shape, posterior.point)
        risk = empirical_risk(params, data.features, data.labels, alpha)
        return RiskEstimate(risk, 0.0, 0)
    if n_samples < 1:
        raise CertificationError(f"n_samples must be >= 1, got {n_samples}")
    validate_delta(delta)

    rng = np.random.default_rng(seed)
    risks = np.empty(n_samples)
    for t in range(n_samples):
        theta = posterior.sample(rng)
        risks[t] = empirical_risk(ModelParams(shape, theta), data.features, data.labels, alpha)
    log_term = math.log(1.0 / delta)
    if strict:
        correction = math.sqrt(log_term / (2.0 * n_samples))
    else:
        correction = math.sqrt(2.0 * log_term / n_samples)
    return RiskEstimate(float(risks.mean()), correction, n_samples)


def wasserstein_to(posterior: PosteriorMeasure, eta: GaussianMeasure) -> float:
    """W₁ upper bound: chi-mean form for a Dirac posterior, W₂ for a Gaussian one."""
    if isinstance(posterior, DiracMeasure):
        return w1_dirac_to_gaussian(posterior, eta)
    return w2_gaussian(posterior, eta)


def interpolate_eta(
    posterior: PosteriorMeasure, prior: GaussianMeasure, lam: float, eta_std: float | None = None
) -> GaussianMeasure:
    """
    η on the path between posterior and prior.

    Mean λ·w + (1−λ)·w_P. Variance λσ² + (1−λ)σ_P² for a Gaussian posterior;
    for a Dirac posterior the std is ``eta_std`` if given, else √(1−λ)·σ_P.
    """
    mean = lam * posterior.mean + (1.0 - lam) * prior.mean
    if isinstance(posterior, GaussianMeasure):
        variance = lam * posterior.variance + (1.0 - lam) * prior.variance
        return GaussianMeasure(mean, math.sqrt(variance))
    std = eta_std if eta_std is not None else math.sqrt(1.0 - lam) * prior.std
    return GaussianMeasure(mean, std)


def optimise_eta(
    posterior: PosteriorMeasure,
    prior: GaussianMeasure,
    lip: float,
    m: int,
    delta: float,
    log_surcharge: float = 0.0,
    grid_size: int = config.ETA_GRID_SIZE,
) -> EtaChoice:
    """
    Best η for the KL-Wasserstein gap along the posterior-prior path.

    λ runs over an evenly spaced grid of [0, 1] with both endpoints, so the
    result never exceeds the η = P instantiation nor (for Gaussian posteriors)
    the η = ρ instantiation. The certificate holds for every η at once, so the
    search costs no confidence.
    """
    best: EtaChoice | None = None
    for lam in np.linspace(0.0, 1.0, grid_size):
        if isinstance(posterior, DiracMeasure) and lam >= 1.0:
            continue  # η = δ_w has infinite KL to P
        eta = interpolate_eta(posterior, prior, float(lam))
        if isinstance(posterior, GaussianMeasure) and lam >= 1.0:
            eta = posterior
        gap = kl_wass_gap(
            lip, wasserstein_to(posterior, eta), kl_gaussian(eta, prior), m, delta, log_surcharge
        )
        if best is None or gap < best.gap:
            best = EtaChoice(eta, float(lam), gap)
    assert best is not None
    return best


def _lambda_candidates(family: BoundFamily, m: int, delta_bound: float) -> list[float]:
    if family is BoundFamily.CATONI_FAST_RATE:
        return list(config.FAST_RATE_LAMBDA_GRID)
    if family is BoundFamily.CATONI:
        base = math.sqrt(2.0 * m * math.log(2.0 / delta_bound))
    else:
        base = math.sqrt(2.0 * math.log(2.0 / delta_bound) / m)
    return [base * k for k in config.LAMBDA_GRID_MULTIPLIERS]


EtaSource = GaussianMeasure | Callable[[GaussianMeasure], GaussianMeasure] | None


def certify(
    family: BoundFamily | str,
    posterior: PosteriorMeasure,
    prior: GaussianMeasure,
    shape: ModelShape,
    data: Dataset,
    *,
    eta: EtaSource = None,
    lipschitz: LipschitzEstimate | None = None,
    delta: float = config.DEFAULT_DELTA,
    mc_samples: int = config.MC_RISK_SAMPLES,
    seed: int = config.RANDOM_SEED,
    strict_mc: bool = False,
    lam: float | None = None,
    second_moment: float | str = 1.0,
    log_surcharge: float = 0.0,
    snap_prior_variance: bool = False,
    risk: RiskEstimate | None = None,
    frobenius_enforced: bool = False,
    notes: list[str] | None = None,
    provenance: dict | None = None,
) -> BoundReport:
    """
    Population-risk certificate of ``posterior`` on the sample ``data``.

    Args:
        family: Bound family
        posterior: Dirac or Gaussian posterior ρ
        prior: Gaussian prior P
        shape: Model architecture (for the empirical risk)
        data: Certification sample S (m = its size)
        eta: Interpolation measure η, or a function of the (possibly snapped)
            prior returning η; None means η = ρ (Gaussian posteriors only)
        lipschitz: Gap Lipschitz estimate, required when a Wasserstein term is used
        delta: Global confidence
        mc_samples: Posterior draws for the Monte-Carlo risk (Gaussian posteriors)
        seed: Seed of the Monte-Carlo risk
        strict_mc: Use the tighter Hoeffding constant
        lam: Fixed λ for Catoni-type families; None picks from a grid with a
            ln|grid| surcharge
        second_moment: Upper bound on E[ℓ²] for the supermartingale family, or
            "empirical" for the (non-rigorous) plug-in value
        log_surcharge: Extra additive term on ln(1/δ) (e.g. ln T for a
            data-dependent prior)
        snap_prior_variance: Snap σ_P² to the grid c·exp(−j/b) and pay its penalty
        risk: Precomputed risk estimate to reuse
        frobenius_enforced: Whether MLP weights were projected to Frobenius norm <= 1
        notes: Extra notes for the report
        provenance: Seeds, dataset hash and config hash

    Returns:
        BoundReport

    Raises:
        CertificationError: For incompatible family/posterior combinations,
            a missing or mismatched Lipschitz estimate
    """
    try:
        family = BoundFamily(family)
    except ValueError:
        raise CertificationError(f"unknown bound family '{family}'")
    if family is BoundFamily.STUDENT:
        raise CertificationError("use certify_student for the Student family")

    is_dirac = isinstance(posterior, DiracMeasure)
    kind = "dirac" if is_dirac else "gaussian"
    report_notes = list(notes or [])

    if family not in IPM_FAMILIES:
        if is_dirac:
            raise CertificationError(
                f"{family.value} needs KL(ρ‖P), which is infinite for a Dirac posterior "
                "and a Gaussian prior; use a Wasserstein family"
            )
        eta = None
    elif eta is None and is_dirac:
        raise CertificationError("a Dirac posterior needs an interpolation measure η")
    uses_wasserstein = family in IPM_FAMILIES and eta is not None

    try:
        ledger = compose_delta_budget(delta, kind, uses_wasserstein, not is_dirac)
    except BoundError as e:
        raise CertificationError(str(e))
    delta_bound = ledger.share("bound")

    if uses_wasserstein:
        if lipschitz is None:
            raise CertificationError(f"{family.value} with η ≠ ρ needs a Lipschitz estimate")
        if abs(lipschitz.delta - ledger.share("lipschitz")) > 1e-12:
            raise CertificationError(
                f"Lipschitz estimate was computed at δ = {lipschitz.delta:.6g} but the ledger "
                f"reserves {ledger.share('lipschitz'):.6g}"
            )

    if risk is None:
        risk = mc_expected_risk(
            posterior,
            shape,
            data,
            mc_samples,
            ledger.share("hoeffding") if ledger.has("hoeffding") else delta,
            seed,
            strict=strict_mc,
        )
    if not is_dirac:
        report_notes.append(
            f"empirical risk estimated from {risk.samples} posterior draws "
            f"({'strict' if strict_mc else 'default'} Hoeffding constant)"
        )

    m = data.m
    if family is BoundFamily.SUPERMARTINGALE and second_moment == "empirical":
        losses = example_losses(ModelParams(shape, posterior.mean), data.features, data.labels)
        second_moment = float(np.mean(losses**2))
        report_notes.append("second moment is an empirical plug-in: certificate not rigorous")

    def assemble(prior_used: GaussianMeasure, surcharge: float) -> tuple[dict[str, float], float]:
        eta_used = eta(prior_used) if callable(eta) else eta
        if eta_used is None:
            eta_used = posterior  # Gaussian posterior, η = ρ
        assert isinstance(eta_used, GaussianMeasure)

        terms: dict[str, float] = {
            "empirical_risk": risk.mean,
            "mc_correction": risk.correction,
            "risk_term": risk.value,
            "delta_bound": delta_bound,
            "log_surcharge": surcharge,
            "prior_std": prior_used.std,
        }
        kl = kl_gaussian(eta_used, prior_used)
        wass = wasserstein_to(posterior, eta_used) if uses_wasserstein else 0.0
        lip_value = lipschitz.value if lipschitz is not None and uses_wasserstein else 0.0
        terms["kl"] = kl
        terms["kl_term"] = kl / (2.0 * m)

        if family in IPM_FAMILIES:
            terms["wasserstein"] = wass
            terms["eta_std"] = eta_used.std
        if family is BoundFamily.KL_WASSERSTEIN:
            lip_sq = lipschitz_for_squared_gap(lipschitz) if uses_wasserstein else 0.0
            terms["lipschitz"] = lip_sq
            terms["wass_term"] = lip_sq * wass
        elif family in (BoundFamily.REVERSE_KL, BoundFamily.HELLINGER, BoundFamily.TV):
            terms["lipschitz"] = lip_value
            terms["w_gamma"] = lip_value * wass
            terms["wass_term"] = terms["w_gamma"]
            if family is BoundFamily.REVERSE_KL:
                terms["reverse_kl"] = reverse_kl(eta_used, prior_used)
            elif family is BoundFamily.HELLINGER:
                terms["hellinger"] = squared_hellinger(eta_used, prior_used)
            else:
                terms["tv"] = tv_upper(eta_used, prior_used)
        elif family in LAMBDA_FAMILIES:
            terms["lipschitz"] = lip_value
            terms["wass_term"] = lip_value * wass
            if family is BoundFamily.SUPERMARTINGALE:
                terms["second_moment"] = float(second_moment)
                terms["divergence_scale"] = float(m)

        if family in LAMBDA_FAMILIES:
            if lam is not None:
                terms["lambda"] = float(lam)
                value = evaluate_terms(family, terms, m)
            else:
                grid = _lambda_candidates(family, m, delta_bound)
                terms["log_surcharge"] = surcharge + lambda_grid_penalty(len(grid))
                best_value = math.inf
                best_lam = grid[0]
                for candidate in grid:
                    terms["lambda"] = candidate
                    candidate_value = evaluate_terms(family, terms, m)
                    if candidate_value < best_value:
                        best_value, best_lam = candidate_value, candidate
                terms["lambda"] = best_lam
                value = best_value
        else:
            value = evaluate_terms(family, terms, m)
        return terms, value

    if snap_prior_variance:
        base_log = math.log(1.0 / delta_bound)

        def bound_for(grid_sq: float, penalty: float) -> float:
            snapped = GaussianMeasure(prior.mean, math.sqrt(grid_sq))
            return assemble(snapped, log_surcharge + penalty - base_log)[1]

        grid_sq, penalty = prior_variance_penalty(
            prior.variance, delta=delta_bound, bound_fn=bound_for
        )
        prior = GaussianMeasure(prior.mean, math.sqrt(grid_sq))
        log_surcharge = log_surcharge + penalty - base_log
        report_notes.append(
            f"prior variance snapped to grid value {grid_sq:.6g}; "
            f"ln(1/δ) replaced by {penalty:.6g}"
        )

    terms, value = assemble(prior, log_surcharge)
    if family in LAMBDA_FAMILIES and lam is None:
        report_notes.append("λ chosen from a fixed grid with a ln|grid| surcharge")
    if family is BoundFamily.SUPERMARTINGALE:
        report_notes.append("divergence term divided by m·λ")
    if uses_wasserstein:
        report_notes.append(
            "Lipschitz surrogate is the best value found by ascent, an empirical estimate"
        )
        if family is BoundFamily.KL_WASSERSTEIN:
            report_notes.append("squared-gap Lipschitz constant = 2·L(m, δ)")
        if shape.kind == "mlp":
            norms = frobenius_norms(ModelParams(shape, posterior.mean))
            held = "enforced" if frobenius_enforced else "not enforced"
            report_notes.append(
                f"Frobenius-norm hypothesis {held}; max weight-matrix norm {max(norms):.4g}"
            )
    terms["gap"] = value - risk.value

    return BoundReport(
        family=family,
        terms=terms,
        delta_ledger=ledger,
        value=value,
        m=m,
        notes=report_notes,
        provenance=dict(provenance or {}),
    )


def certify_student(
    lip: float,
    sigma: float,
    f_pd: float,
    mean_dist_sq: float,
    m: int,
    delta: float = config.DEFAULT_DELTA,
    f_stderr: float = 0.0,
    empirical_risk_value: float = 0.0,
    provenance: dict | None = None,
) -> BoundReport:
    """
    Student-posterior certificate; ``lip`` must be L(m, δ/2).

    With the default ``empirical_risk_value`` of 0 the value is the gap bound alone.
    """
    ledger = compose_delta_budget(delta, "gaussian", uses_wasserstein=True, uses_mc=False)
    terms = {
        "risk_term": float(empirical_risk_value),
        "delta_bound": ledger.share("bound"),
        "log_surcharge": 0.0,
        "lipschitz": float(lip),
        "sigma": float(sigma),
        "f_pd": float(f_pd),
        "f_pd_stderr": float(f_stderr),
        "mean_dist_sq": float(mean_dist_sq),
    }
    value = evaluate_terms(BoundFamily.STUDENT, terms, m)
    terms["gap"] = value - terms["risk_term"]
    return BoundReport(
        family=BoundFamily.STUDENT,
        terms=terms,
        delta_ledger=ledger,
        value=value,
        m=m,
        notes=[
            "divergence term uses ‖μ−μ₀‖²/(2σm) with σ, not σ²",
            "f(p, d) is a Monte-Carlo estimate; its standard error is in terms.f_pd_stderr",
        ],
        provenance=dict(provenance or {}),
    )
