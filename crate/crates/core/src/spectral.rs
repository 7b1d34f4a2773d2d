//! Eigenvalue criterion, coupling/energy maps, threshold couplings, and the
//! classification of the two spectral edges.
//!
//! An energy E outside the continuous spectrum is an eigenvalue of the
//! rank-one-perturbed operator exactly when I(E) is finite and J(E) is
//! nonzero, in which case the coupling is `v = (2 pi)^d / J(E)`. The open
//! window itself carries no point spectrum. At the edges the analytic
//! finiteness verdicts sort each coupling sign into one of three behaviors:
//! an eigenvalue for arbitrarily small coupling (J divergent), a resonance
//! (J finite, I divergent: the branch reaches the edge at the threshold
//! coupling but the edge is not an eigenvalue), or an embedded mode
//! (I finite: at the threshold the edge energy is an eigenvalue).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::multiplier::MultiplierSpec;
use crate::quadrature::{
    self, integral_i, integral_j, IntegralEstimate, QuadSettings, Side, TorusDomain,
};

/// Why an energy is or is not an eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    Ok,
    IDivergent,
    JZero,
    InteriorEnergy,
}

/// Eigenvalue test outcome for one energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueVerdict {
    pub is_eigenvalue: bool,
    pub reason: VerdictReason,
    /// The coupling constant realizing the eigenvalue, present iff `Ok`.
    pub coupling: Option<f64>,
}

/// A spectral edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Bottom,
    Top,
}

/// Edge behavior for one coupling sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// An eigenvalue detaches for every coupling of this sign.
    Unconditional,
    /// The branch is absorbed at the threshold; the edge energy is not an
    /// eigenvalue there.
    Resonance,
    /// At the threshold the edge energy is an eigenvalue.
    Mode,
}

/// Classification of one edge, with its threshold coupling (0 when the
/// behavior is unconditional).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeBehavior {
    pub edge: Edge,
    pub behavior: Behavior,
    pub threshold: f64,
}

/// Coupling sign selecting which edge a bound state can detach from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingSign {
    Positive,
    Negative,
}

/// Threshold couplings of both edges with their quadrature provenance.
/// `v2 >= 0 >= v0`; a zero threshold means the corresponding edge integral
/// diverges and an eigenvalue exists for arbitrarily small coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub v2: f64,
    pub v0: f64,
    pub top_integral: IntegralEstimate,
    pub bottom_integral: IntegralEstimate,
}

/// A point (v, E) on an eigenvalue branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigencurvePoint {
    pub v: f64,
    pub e: f64,
}

/// Where a solved branch point sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchLocation {
    /// Strictly outside the window.
    Detached,
    /// Exactly at the edge: the threshold coupling of a mode.
    AtEdge,
    /// The eigenvalue exists but lies closer to the edge than f64 can
    /// resolve (log-divergent edges at small coupling); `e` is the edge.
    EdgeLimited,
}

/// A solved eigenvalue branch point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub point: EigencurvePoint,
    pub location: BranchLocation,
}

/// One row of the behavior table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorRow {
    pub d: usize,
    pub top_mode: bool,
    pub top_resonance: bool,
    pub bottom_mode: bool,
    pub bottom_resonance: bool,
}

fn full_volume(d: usize) -> f64 {
    (2.0 * PI).powi(d as i32)
}

/// Tests whether `e` is an eigenvalue of the perturbed operator for some
/// coupling, and returns that coupling when it is.
pub fn is_eigenvalue(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    e: f64,
    settings: &QuadSettings,
) -> Result<EigenvalueVerdict, Error> {
    let w = spec.window();
    if w.contains_interior(e) {
        return Ok(EigenvalueVerdict {
            is_eigenvalue: false,
            reason: VerdictReason::InteriorEnergy,
            coupling: None,
        });
    }
    if e == w.hi || e == w.lo {
        let side = if e == w.hi { Side::Top } else { Side::Bottom };
        let verdict = quadrature::side_verdict(spec, side, dom.dim());
        if !verdict.i_finite {
            return Ok(EigenvalueVerdict {
                is_eigenvalue: false,
                reason: VerdictReason::IDivergent,
                coupling: None,
            });
        }
        // I finite implies J finite; the edge is an eigenvalue at the
        // threshold coupling.
        let j = integral_j(spec, dom, e, settings)?;
        return Ok(verdict_from_j(dom.dim(), j.value.unwrap_or(0.0)));
    }
    // Exterior energy: I(E) is finite and J(E) is sign-definite.
    let j = integral_j(spec, dom, e, settings)?;
    Ok(verdict_from_j(dom.dim(), j.value.unwrap_or(0.0)))
}

fn verdict_from_j(d: usize, j: f64) -> EigenvalueVerdict {
    if j == 0.0 {
        EigenvalueVerdict {
            is_eigenvalue: false,
            reason: VerdictReason::JZero,
            coupling: None,
        }
    } else {
        EigenvalueVerdict {
            is_eigenvalue: true,
            reason: VerdictReason::Ok,
            coupling: Some(full_volume(d) / j),
        }
    }
}

/// The coupling constant `(2 pi)^d / J(E)` for an eigenvalue at `e`.
pub fn coupling_for_energy(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    e: f64,
    settings: &QuadSettings,
) -> Result<f64, Error> {
    let est = integral_j(spec, dom, e, settings)?;
    match est.value {
        Some(j) if j != 0.0 => Ok(full_volume(dom.dim()) / j),
        _ => Err(Error::NoCoupling { energy: e }),
    }
}

/// Threshold couplings of both edges.
pub fn thresholds(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    settings: &QuadSettings,
) -> Result<ThresholdReport, Error> {
    let w = spec.window();
    let top = integral_j(spec, dom, w.hi, settings)?;
    let bottom = integral_j(spec, dom, w.lo, settings)?;
    let vol = full_volume(dom.dim());
    let v2 = top.value.map_or(0.0, |j| vol / j);
    let v0 = bottom.value.map_or(0.0, |j| vol / j);
    Ok(ThresholdReport {
        v2,
        v0,
        top_integral: top,
        bottom_integral: bottom,
    })
}

/// Classifies the edge reached by couplings of the given sign.
pub fn classify_edge(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    sign: CouplingSign,
    settings: &QuadSettings,
) -> Result<EdgeBehavior, Error> {
    let (side, edge) = match sign {
        CouplingSign::Positive => (Side::Top, Edge::Top),
        CouplingSign::Negative => (Side::Bottom, Edge::Bottom),
    };
    let verdict = quadrature::side_verdict(spec, side, dom.dim());
    let behavior = if !verdict.j_finite {
        Behavior::Unconditional
    } else if !verdict.i_finite {
        Behavior::Resonance
    } else {
        Behavior::Mode
    };
    let threshold = if verdict.j_finite {
        let w = spec.window();
        let e = match side {
            Side::Top => w.hi,
            Side::Bottom => w.lo,
        };
        let j = integral_j(spec, dom, e, settings)?;
        full_volume(dom.dim()) / j.value.unwrap()
    } else {
        0.0
    };
    Ok(EdgeBehavior {
        edge,
        behavior,
        threshold,
    })
}

/// Mode/resonance table across a dimension range; purely analytic.
pub fn behavior_table(
    spec: &MultiplierSpec,
    dims: impl IntoIterator<Item = usize>,
) -> Result<Vec<BehaviorRow>, Error> {
    let exps = spec.exponents();
    let mut rows = Vec::new();
    for d in dims {
        TorusDomain::new(d)?;
        let top = quadrature::edge_finiteness(exps.top, d);
        let bottom = quadrature::edge_finiteness(exps.bottom, d);
        rows.push(BehaviorRow {
            d,
            top_mode: top.i_finite,
            top_resonance: top.j_finite && !top.i_finite,
            bottom_mode: bottom.i_finite,
            bottom_resonance: bottom.j_finite && !bottom.i_finite,
        });
    }
    Ok(rows)
}

/// Solves for the eigenvalue energy at coupling `v`. Returns `None` when no
/// eigenvalue exists for that coupling (including `v = 0`).
pub fn energy_for_coupling(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    v: f64,
    settings: &QuadSettings,
) -> Result<Option<BranchPoint>, Error> {
    if v == 0.0 {
        return Ok(None);
    }
    if !v.is_finite() {
        return Err(Error::InvalidDomain(format!("coupling {v} is not finite")));
    }
    let d = dom.dim();
    let w = spec.window();
    let (side, edge_energy) = if v > 0.0 {
        (Side::Top, w.hi)
    } else {
        (Side::Bottom, w.lo)
    };
    let verdict = quadrature::side_verdict(spec, side, d);

    if verdict.j_finite {
        let est = integral_j(spec, dom, edge_energy, settings)?;
        let j_edge = est.value.unwrap();
        let threshold = full_volume(d) / j_edge;
        // Couplings indistinguishable from the threshold within the edge
        // quadrature accuracy are treated as the threshold itself.
        let rel_err = (est.abs_error / j_edge.abs()).max(1e-14);
        let band = threshold.abs() * 2.0 * rel_err;
        if (v - threshold).abs() <= band {
            return Ok(if verdict.i_finite {
                Some(BranchPoint {
                    point: EigencurvePoint { v, e: edge_energy },
                    location: BranchLocation::AtEdge,
                })
            } else {
                None
            });
        }
        let beyond = match side {
            Side::Top => v > threshold,
            Side::Bottom => v < threshold,
        };
        if !beyond {
            return Ok(None);
        }
    }
    solve_branch(spec, dom, side, v, settings).map(Some)
}

/// Bisection on the strictly monotone map E -> coupling(E) - v over the
/// rank-one norm bracket.
fn solve_branch(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    side: Side,
    v: f64,
    settings: &QuadSettings,
) -> Result<BranchPoint, Error> {
    let w = spec.window();
    let vmag = v.abs();
    let (edge, mut a, mut b) = match side {
        Side::Top => {
            let edge = w.hi;
            (edge, edge + 1e-12 * (1.0 + edge.abs()), edge + vmag)
        }
        Side::Bottom => {
            let edge = w.lo;
            (edge, edge - vmag, edge - 1e-12 * (1.0 + edge.abs()))
        }
    };
    let f = |e: f64| -> Result<f64, Error> { Ok(coupling_for_energy(spec, dom, e, settings)? - v) };
    // coupling(E) increases with E on both exterior components, so the root
    // bracket needs f <= 0 at the left end and f >= 0 at the right end.
    let (near_is_left, near, far) = match side {
        Side::Top => (true, a, b),
        Side::Bottom => (false, b, a),
    };
    let f_near = f(near)?;
    let crosses = if near_is_left {
        f_near <= 0.0
    } else {
        f_near >= 0.0
    };
    if !crosses {
        // Even the closest representable exterior energy already needs more
        // coupling than v: the eigenvalue hugs the edge below f64
        // resolution (log-divergent edges at small coupling).
        return Ok(BranchPoint {
            point: EigencurvePoint { v, e: edge },
            location: BranchLocation::EdgeLimited,
        });
    }
    let f_far = f(far)?;
    let far_ok = if near_is_left {
        f_far >= 0.0
    } else {
        f_far <= 0.0
    };
    if !far_ok {
        return Err(Error::BracketFailure(format!(
            "coupling map not bracketed on side {side:?}: f({near}) = {f_near}, f({far}) = {f_far}"
        )));
    }
    // The bracket [a, b] now has f(a) <= 0 <= f(b) on both sides. Bisect
    // with geometric midpoints in the distance from the edge: near a
    // log-divergent edge the coupling is exponentially sensitive to the
    // energy, and only log-space bisection bounds the coupling error.
    let dir = match side {
        Side::Top => 1.0,
        Side::Bottom => -1.0,
    };
    let mut mid = 0.5 * (a + b);
    for _ in 0..200 {
        let da = (a - edge) * dir;
        let db = (b - edge) * dir;
        let ratio = (da / db).max(db / da);
        mid = edge + dir * (da * db).sqrt();
        if mid == a || mid == b || ratio - 1.0 <= 1e-12 {
            break;
        }
        if f(mid)? <= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(BranchPoint {
        point: EigencurvePoint { v, e: mid },
        location: BranchLocation::Detached,
    })
}

/// Real-space eigenvector amplitudes at the requested lattice sites,
/// normalized to unit l^2 norm over the whole lattice with a positive
/// amplitude at the origin. The amplitudes are real: the odd part of the
/// kernel integrates to zero by the theta -> -theta symmetry of the symbol.
pub fn eigenvector_profile(
    spec: &MultiplierSpec,
    dom: &TorusDomain,
    e: f64,
    sites: &[Vec<i64>],
    settings: &QuadSettings,
) -> Result<Vec<f64>, Error> {
    let d = dom.dim();
    for site in sites {
        if site.len() != d {
            return Err(Error::InvalidDomain(format!(
                "site {site:?} has wrong dimension (expected {d})"
            )));
        }
    }
    let w = spec.window();
    if w.contains_interior(e) {
        return Err(Error::InteriorEnergy {
            energy: e,
            lo: w.lo,
            hi: w.hi,
        });
    }
    let (side, eps) = if e >= w.hi {
        (Side::Top, e - w.hi)
    } else {
        (Side::Bottom, w.lo - e)
    };
    if eps == 0.0 {
        let verdict = quadrature::side_verdict(spec, side, d);
        if !verdict.i_finite {
            return Err(Error::NoCoupling { energy: e });
        }
    }
    let i_est = integral_i(spec, dom, e, settings)?;
    let i_val = i_est.value.ok_or(Error::NoCoupling { energy: e })?;
    // Parseval: the lattice l^2 norm of the kernel is I(E) / (2 pi)^d.
    let norm = (i_val / full_volume(d)).sqrt();
    Ok(sites
        .iter()
        .map(|site| quadrature::resolvent_amplitude(spec, d, side, eps, site, settings) / norm)
        .collect())
}
