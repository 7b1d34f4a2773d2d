//! The catalogue of admissible multiplier functions applied to the discrete
//! Laplacian. Every entry is strictly increasing and C^1 on (0, infinity)
//! with a finite right limit at 0, so its spectral window is the closed
//! interval between the values at 0 and 2.
//!
//! Besides plain evaluation, each entry provides numerically stable forms of
//! the two edge gaps `f(u) - f(0)` and `f(2) - f(2 - delta)`. The quadrature
//! module leans on these: near a spectral edge the naive difference of two
//! nearly equal numbers would lose every significant digit, while the
//! `expm1`/`ln_1p` forms below stay accurate down to gaps of order 1e-300.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One atom of a discrete Bernstein representation: weight `w` at decay
/// rate `y`, contributing `w * (1 - exp(-u * y))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinAtom {
    pub w: f64,
    pub y: f64,
}

/// Internal parameter record. Kept private so that an invalid combination
/// can never be observed; all construction goes through the checked
/// constructors (or serde, which funnels through the same checks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Kind {
    Identity,
    Fractional {
        alpha: f64,
    },
    Relativistic {
        alpha: f64,
        mass: f64,
    },
    JumpDiffusion {
        alpha: f64,
        bcoef: f64,
    },
    GeometricStable {
        alpha: f64,
    },
    HigherOrder {
        beta: f64,
    },
    Bernstein {
        drift: f64,
        atoms: Vec<BernsteinAtom>,
    },
}

/// A validated multiplier function.
///
/// The JSON encoding is part of the external contract, e.g.
/// `{"kind":"fractional","alpha":1.0}` or
/// `{"kind":"bernstein","drift":0.0,"atoms":[{"w":1.0,"y":2.0}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Kind", into = "Kind")]
pub struct MultiplierSpec {
    kind: Kind,
}

/// Power-law exponents of the multiplier at the two ends of [0, 2]:
/// `bottom` governs `f(x) - f(0)` as x -> 0+ and `top` governs
/// `f(2) - f(2 - x)` as x -> 0+.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeExponents {
    pub bottom: f64,
    pub top: f64,
}

/// The closed interval swept by the multiplier over [0, 2]; equals the
/// continuous spectrum of the multiplication operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub lo: f64,
    pub hi: f64,
}

impl SpectralWindow {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// True when `e` lies strictly between the edges.
    pub fn contains_interior(&self, e: f64) -> bool {
        e > self.lo && e < self.hi
    }
}

fn check(cond: bool, msg: &str) -> Result<(), Error> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidSpec(msg.to_string()))
    }
}

fn validate(kind: &Kind) -> Result<(), Error> {
    match kind {
        Kind::Identity => Ok(()),
        Kind::Fractional { alpha } | Kind::GeometricStable { alpha } => check(
            alpha.is_finite() && *alpha > 0.0 && *alpha < 2.0,
            "alpha must lie in (0, 2)",
        ),
        Kind::Relativistic { alpha, mass } => {
            check(
                alpha.is_finite() && *alpha > 0.0 && *alpha < 2.0,
                "alpha must lie in (0, 2)",
            )?;
            check(
                mass.is_finite() && *mass >= 0.0,
                "mass must be finite and >= 0",
            )
        }
        Kind::JumpDiffusion { alpha, bcoef } => {
            check(
                alpha.is_finite() && *alpha > 0.0 && *alpha < 2.0,
                "alpha must lie in (0, 2)",
            )?;
            check(
                bcoef.is_finite() && *bcoef > 0.0,
                "bcoef must be finite and > 0",
            )
        }
        Kind::HigherOrder { beta } => check(
            beta.is_finite() && *beta > 1.0,
            "beta must be finite and > 1",
        ),
        Kind::Bernstein { drift, atoms } => {
            check(
                drift.is_finite() && *drift >= 0.0,
                "drift must be finite and >= 0",
            )?;
            for atom in atoms {
                check(
                    atom.w.is_finite() && atom.w > 0.0 && atom.y.is_finite() && atom.y > 0.0,
                    "bernstein atoms need w > 0 and y > 0",
                )?;
            }
            check(
                *drift > 0.0 || !atoms.is_empty(),
                "bernstein multiplier needs a positive drift or at least one atom",
            )
        }
    }
}

impl TryFrom<Kind> for MultiplierSpec {
    type Error = Error;

    fn try_from(kind: Kind) -> Result<Self, Error> {
        validate(&kind)?;
        Ok(MultiplierSpec { kind })
    }
}

impl From<MultiplierSpec> for Kind {
    fn from(spec: MultiplierSpec) -> Kind {
        spec.kind
    }
}

impl MultiplierSpec {
    /// The identity multiplier: the plain discrete Laplacian.
    pub fn identity() -> Self {
        MultiplierSpec {
            kind: Kind::Identity,
        }
    }

    /// `u^(alpha/2)` with `alpha` in (0, 2).
    pub fn fractional(alpha: f64) -> Result<Self, Error> {
        Kind::Fractional { alpha }.try_into()
    }

    /// `(u + mass^(2/alpha))^(alpha/2) - mass`; reduces pointwise to the
    /// fractional entry when `mass == 0`.
    pub fn relativistic(alpha: f64, mass: f64) -> Result<Self, Error> {
        Kind::Relativistic { alpha, mass }.try_into()
    }

    /// `u + bcoef * u^(alpha/2)`.
    pub fn jump_diffusion(alpha: f64, bcoef: f64) -> Result<Self, Error> {
        Kind::JumpDiffusion { alpha, bcoef }.try_into()
    }

    /// `ln(1 + u^(alpha/2))`.
    pub fn geometric_stable(alpha: f64) -> Result<Self, Error> {
        Kind::GeometricStable { alpha }.try_into()
    }

    /// `u^beta` with `beta > 1`.
    pub fn higher_order(beta: f64) -> Result<Self, Error> {
        Kind::HigherOrder { beta }.try_into()
    }

    /// `drift * u + sum_i w_i * (1 - exp(-u * y_i))`.
    pub fn bernstein(drift: f64, atoms: Vec<BernsteinAtom>) -> Result<Self, Error> {
        Kind::Bernstein { drift, atoms }.try_into()
    }

    /// Short kind name, matching the JSON `kind` tag.
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Identity => "identity",
            Kind::Fractional { .. } => "fractional",
            Kind::Relativistic { .. } => "relativistic",
            Kind::JumpDiffusion { .. } => "jump_diffusion",
            Kind::GeometricStable { .. } => "geometric_stable",
            Kind::HigherOrder { .. } => "higher_order",
            Kind::Bernstein { .. } => "bernstein",
        }
    }

    /// Evaluates the multiplier at `u`, intended for `u` in [0, 2].
    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Identity => u,
            Kind::Fractional { alpha } => u.powf(alpha / 2.0),
            Kind::Relativistic { alpha, mass } => {
                if *mass == 0.0 {
                    u.powf(alpha / 2.0)
                } else {
                    let base = mass.powf(2.0 / alpha);
                    (u + base).powf(alpha / 2.0) - mass
                }
            }
            Kind::JumpDiffusion { alpha, bcoef } => u + bcoef * u.powf(alpha / 2.0),
            Kind::GeometricStable { alpha } => u.powf(alpha / 2.0).ln_1p(),
            Kind::HigherOrder { beta } => u.powf(*beta),
            Kind::Bernstein { drift, atoms } => {
                let mut v = drift * u;
                for atom in atoms {
                    v += atom.w * (-(-u * atom.y).exp_m1());
                }
                v
            }
        }
    }

    /// `f(u) - f(0)`, evaluated without cancellation. Exactly 0 at `u = 0`.
    pub fn rise_from_bottom(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Identity => u,
            Kind::Fractional { alpha } => u.powf(alpha / 2.0),
            Kind::Relativistic { alpha, mass } => {
                if *mass == 0.0 {
                    u.powf(alpha / 2.0)
                } else {
                    // (base + u)^h - base^h = mass * expm1(h * ln(1 + u/base))
                    let base = mass.powf(2.0 / alpha);
                    mass * (0.5 * alpha * (u / base).ln_1p()).exp_m1()
                }
            }
            Kind::JumpDiffusion { alpha, bcoef } => u + bcoef * u.powf(alpha / 2.0),
            Kind::GeometricStable { alpha } => u.powf(alpha / 2.0).ln_1p(),
            Kind::HigherOrder { beta } => u.powf(*beta),
            Kind::Bernstein { drift, atoms } => {
                let mut v = drift * u;
                for atom in atoms {
                    v += atom.w * (-(-u * atom.y).exp_m1());
                }
                v
            }
        }
    }

    /// `f(2) - f(2 - delta)`, evaluated without cancellation. Exactly 0 at
    /// `delta = 0` and equal to the window width at `delta = 2`.
    pub fn drop_from_top(&self, delta: f64) -> f64 {
        // 2^h - (2 - delta)^h = -2^h * expm1(h * ln(1 - delta/2))
        fn power_drop(h: f64, delta: f64) -> f64 {
            -(2.0f64.powf(h)) * (h * (-delta / 2.0).ln_1p()).exp_m1()
        }
        match &self.kind {
            Kind::Identity => delta,
            Kind::Fractional { alpha } => power_drop(alpha / 2.0, delta),
            Kind::Relativistic { alpha, mass } => {
                if *mass == 0.0 {
                    power_drop(alpha / 2.0, delta)
                } else {
                    let base = mass.powf(2.0 / alpha);
                    let top = 2.0 + base;
                    -top.powf(alpha / 2.0) * (0.5 * alpha * (-delta / top).ln_1p()).exp_m1()
                }
            }
            Kind::JumpDiffusion { alpha, bcoef } => delta + bcoef * power_drop(alpha / 2.0, delta),
            Kind::GeometricStable { alpha } => {
                let h = alpha / 2.0;
                // ln(1 + 2^h) - ln(1 + (2-delta)^h)
                (power_drop(h, delta) / (1.0 + (2.0 - delta).powf(h))).ln_1p()
            }
            Kind::HigherOrder { beta } => power_drop(*beta, delta),
            Kind::Bernstein { drift, atoms } => {
                let mut v = drift * delta;
                for atom in atoms {
                    v += atom.w * (-2.0 * atom.y).exp() * (delta * atom.y).exp_m1();
                }
                v
            }
        }
    }

    /// The spectral window [f(0), f(2)].
    pub fn window(&self) -> SpectralWindow {
        SpectralWindow {
            lo: self.eval(0.0),
            hi: self.eval(2.0),
        }
    }

    /// Analytic edge exponents of the catalogue entry.
    pub fn exponents(&self) -> EdgeExponents {
        match &self.kind {
            Kind::Identity => EdgeExponents {
                bottom: 1.0,
                top: 1.0,
            },
            Kind::Fractional { alpha } => EdgeExponents {
                bottom: alpha / 2.0,
                top: 1.0,
            },
            Kind::Relativistic { alpha, mass } => {
                if *mass == 0.0 {
                    EdgeExponents {
                        bottom: alpha / 2.0,
                        top: 1.0,
                    }
                } else {
                    EdgeExponents {
                        bottom: 1.0,
                        top: 1.0,
                    }
                }
            }
            Kind::JumpDiffusion { alpha, .. } => EdgeExponents {
                bottom: alpha / 2.0,
                top: 1.0,
            },
            Kind::GeometricStable { alpha } => EdgeExponents {
                bottom: alpha / 2.0,
                top: 1.0,
            },
            Kind::HigherOrder { beta } => EdgeExponents {
                bottom: *beta,
                top: 1.0,
            },
            // Finite atom sums have a finite, nonzero derivative at 0.
            Kind::Bernstein { .. } => EdgeExponents {
                bottom: 1.0,
                top: 1.0,
            },
        }
    }

    /// Estimates the edge exponents numerically from log-log regression of
    /// the two edge gaps over the geometric grid x = 2^-k, k = 1..samples.
    /// Fails when the successive slopes near the small-x end still spread by
    /// more than `tol`, and carries the raw slopes in the error.
    pub fn estimate_exponents(&self, samples: usize, tol: f64) -> Result<EdgeExponents, Error> {
        if samples < 4 {
            return Err(Error::InvalidDomain(
                "exponent estimation needs samples >= 4".into(),
            ));
        }
        let bottom = estimate_slope(samples, tol, |x| self.rise_from_bottom(x))?;
        let top = estimate_slope(samples, tol, |x| self.drop_from_top(x))?;
        Ok(EdgeExponents { bottom, top })
    }
}

fn estimate_slope(samples: usize, tol: f64, gap: impl Fn(f64) -> f64) -> Result<f64, Error> {
    let mut lx = Vec::with_capacity(samples);
    let mut ly = Vec::with_capacity(samples);
    for k in 1..=samples {
        let x = 2.0f64.powi(-(k as i32));
        let y = gap(x);
        if !y.is_finite() || y <= 0.0 {
            return Err(Error::EstimationFailed {
                slopes: vec![],
                spread: f64::INFINITY,
                tol,
            });
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }

    // Least-squares slope over all points.
    let n = samples as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..samples {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    let slope = num / den;

    // Convergence check on the pairwise slopes over the small-x tail.
    let pair: Vec<f64> = (1..samples)
        .map(|i| (ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]))
        .collect();
    let tail = ((samples - 1) / 4 + 1).max(2);
    let tail_slice = &pair[pair.len() - tail.min(pair.len())..];
    let lo = tail_slice.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail_slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if !spread.is_finite() || spread > tol * slope.abs().max(1.0) {
        return Err(Error::EstimationFailed {
            slopes: pair,
            spread,
            tol,
        });
    }
    Ok(slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Default-parameter instances of every catalogue entry.
    pub(crate) fn catalogue() -> Vec<MultiplierSpec> {
        vec![
            MultiplierSpec::identity(),
            MultiplierSpec::fractional(1.0).unwrap(),
            MultiplierSpec::relativistic(1.0, 1.0).unwrap(),
            MultiplierSpec::jump_diffusion(1.0, 1.0).unwrap(),
            MultiplierSpec::geometric_stable(1.0).unwrap(),
            MultiplierSpec::higher_order(2.0).unwrap(),
            MultiplierSpec::bernstein(0.0, vec![BernsteinAtom { w: 1.0, y: 2.0 }]).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(MultiplierSpec::identity().eval(1.0), 1.0);
        assert_relative_eq!(
            MultiplierSpec::fractional(1.0).unwrap().eval(2.0),
            2.0f64.sqrt(),
            max_relative = 1e-15
        );
        assert_eq!(
            MultiplierSpec::relativistic(1.0, 1.0).unwrap().eval(0.0),
            0.0
        );
    }

    #[test]
    fn window_examples() {
        let w = MultiplierSpec::identity().window();
        assert_eq!((w.lo, w.hi), (0.0, 2.0));

        let w = MultiplierSpec::fractional(1.0).unwrap().window();
        assert_eq!(w.lo, 0.0);
        assert_relative_eq!(w.hi, 2.0f64.sqrt(), max_relative = 1e-15);

        let w = MultiplierSpec::geometric_stable(1.0).unwrap().window();
        assert_eq!(w.lo, 0.0);
        assert_relative_eq!(w.hi, (1.0 + 2.0f64.sqrt()).ln(), max_relative = 1e-15);
        assert_relative_eq!(w.hi, 0.881373587019543, max_relative = 1e-12);
    }

    #[test]
    fn window_matches_eval_exactly() {
        for spec in catalogue() {
            let w = spec.window();
            assert_eq!(w.lo, spec.eval(0.0));
            assert_eq!(w.hi, spec.eval(2.0));
            assert!(w.lo < w.hi);
        }
    }

    #[test]
    fn exponent_examples() {
        let e = MultiplierSpec::identity().exponents();
        assert_eq!((e.bottom, e.top), (1.0, 1.0));
        let e = MultiplierSpec::fractional(1.0).unwrap().exponents();
        assert_eq!((e.bottom, e.top), (0.5, 1.0));
        let e = MultiplierSpec::higher_order(2.0).unwrap().exponents();
        assert_eq!((e.bottom, e.top), (2.0, 1.0));
        let e = MultiplierSpec::relativistic(1.0, 0.0).unwrap().exponents();
        assert_eq!((e.bottom, e.top), (0.5, 1.0));
    }

    #[test]
    fn strict_monotonicity_on_grid() {
        for spec in catalogue() {
            let mut prev = spec.eval(0.0);
            for i in 1..=1000 {
                let u = 2.0 * i as f64 / 1000.0;
                let v = spec.eval(u);
                assert!(
                    v > prev,
                    "{} not increasing at u = {u}: {v} <= {prev}",
                    spec.kind_name()
                );
                prev = v;
            }
        }
    }

    #[test]
    fn estimated_exponents_match_analytic() {
        for spec in catalogue() {
            let analytic = spec.exponents();
            let est = spec.estimate_exponents(40, 0.05).unwrap();
            assert_relative_eq!(est.bottom, analytic.bottom, max_relative = 0.05);
            assert_relative_eq!(est.top, analytic.top, max_relative = 0.05);
        }
    }

    #[test]
    fn geometric_stable_estimate() {
        let est = MultiplierSpec::geometric_stable(1.0)
            .unwrap()
            .estimate_exponents(40, 0.05)
            .unwrap();
        assert_relative_eq!(est.bottom, 0.5, max_relative = 0.05);
        assert_relative_eq!(est.top, 1.0, max_relative = 0.05);
    }

    #[test]
    fn massless_limit_matches_fractional() {
        let massless = MultiplierSpec::relativistic(1.0, 0.0).unwrap();
        let fractional = MultiplierSpec::fractional(1.0).unwrap();
        for i in 0..=200 {
            let u = 2.0 * i as f64 / 200.0;
            assert_eq!(massless.eval(u), fractional.eval(u));
        }
    }

    #[test]
    fn gaps_are_consistent_with_eval() {
        for spec in catalogue() {
            let w = spec.window();
            for i in 1..=50 {
                let x = 2.0 * i as f64 / 50.0;
                assert_relative_eq!(
                    spec.rise_from_bottom(x),
                    spec.eval(x) - w.lo,
                    max_relative = 1e-10
                );
                assert_relative_eq!(
                    spec.drop_from_top(x),
                    w.hi - spec.eval(2.0 - x),
                    max_relative = 1e-10
                );
            }
            assert_eq!(spec.rise_from_bottom(0.0), 0.0);
            assert_eq!(spec.drop_from_top(0.0), 0.0);
        }
    }

    #[test]
    fn gaps_stay_accurate_near_the_edges() {
        // At x = 1e-12 a naive eval difference would have lost ~12 digits.
        for spec in catalogue() {
            let e = spec.exponents();
            let x = 1e-12;
            let rise = spec.rise_from_bottom(x);
            let drop = spec.drop_from_top(x);
            assert!(rise > 0.0 && drop > 0.0);
            // Both gaps follow their leading power law at this scale.
            let rise_ratio = spec.rise_from_bottom(2.0 * x) / rise;
            let drop_ratio = spec.drop_from_top(2.0 * x) / drop;
            assert_relative_eq!(rise_ratio, 2.0f64.powf(e.bottom), max_relative = 1e-6);
            assert_relative_eq!(drop_ratio, 2.0f64.powf(e.top), max_relative = 1e-6);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MultiplierSpec::fractional(0.0).is_err());
        assert!(MultiplierSpec::fractional(2.0).is_err());
        assert!(MultiplierSpec::fractional(f64::NAN).is_err());
        assert!(MultiplierSpec::higher_order(1.0).is_err());
        assert!(MultiplierSpec::relativistic(1.0, -0.5).is_err());
        assert!(MultiplierSpec::jump_diffusion(1.0, 0.0).is_err());
        assert!(MultiplierSpec::bernstein(0.0, vec![]).is_err());
        assert!(MultiplierSpec::bernstein(0.0, vec![BernsteinAtom { w: -1.0, y: 1.0 }]).is_err());
    }

    #[test]
    fn canonical_json_field_names() {
        let spec = MultiplierSpec::fractional(1.0).unwrap();
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            r#"{"kind":"fractional","alpha":1.0}"#
        );
        let spec = MultiplierSpec::bernstein(0.0, vec![BernsteinAtom { w: 1.0, y: 2.0 }]).unwrap();
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            r#"{"kind":"bernstein","drift":0.0,"atoms":[{"w":1.0,"y":2.0}]}"#
        );
        let spec = MultiplierSpec::relativistic(1.0, 1.0).unwrap();
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            r#"{"kind":"relativistic","alpha":1.0,"mass":1.0}"#
        );
    }

    #[test]
    fn json_decode_validates() {
        let ok: Result<MultiplierSpec, _> =
            serde_json::from_str(r#"{"kind":"higher_order","beta":2.0}"#);
        assert!(ok.is_ok());
        let bad: Result<MultiplierSpec, _> =
            serde_json::from_str(r#"{"kind":"fractional","alpha":3.0}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn json_roundtrip() {
        for spec in catalogue() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: MultiplierSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn bernstein_formula_matches_direct_sum() {
        let atoms = vec![
            BernsteinAtom { w: 0.7, y: 0.9 },
            BernsteinAtom { w: 1.3, y: 3.1 },
        ];
        let spec = MultiplierSpec::bernstein(0.4, atoms.clone()).unwrap();
        for i in 0..=20 {
            let u = 2.0 * i as f64 / 20.0;
            let direct: f64 = 0.4 * u
                + atoms
                    .iter()
                    .map(|a| a.w * (1.0 - (-u * a.y).exp()))
                    .sum::<f64>();
            assert_relative_eq!(spec.eval(u), direct, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn estimation_failure_carries_slopes() {
        // Far too few samples with a tiny tolerance trips the spread check
        // for an entry whose gap is not an exact power law.
        let err = MultiplierSpec::geometric_stable(1.9)
            .unwrap()
            .estimate_exponents(4, 1e-12)
            .unwrap_err();
        match err {
            Error::EstimationFailed {
                slopes,
                spread,
                tol,
            } => {
                assert!(!slopes.is_empty());
                assert!(spread > tol);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arbitrary_spec() -> impl Strategy<Value = MultiplierSpec> {
            prop_oneof![
                Just(MultiplierSpec::identity()),
                (0.05f64..1.95).prop_map(|a| MultiplierSpec::fractional(a).unwrap()),
                ((0.05f64..1.95), (0.0f64..3.0))
                    .prop_map(|(a, m)| MultiplierSpec::relativistic(a, m).unwrap()),
                ((0.05f64..1.95), (0.05f64..4.0))
                    .prop_map(|(a, b)| MultiplierSpec::jump_diffusion(a, b).unwrap()),
                (0.05f64..1.95).prop_map(|a| MultiplierSpec::geometric_stable(a).unwrap()),
                (1.05f64..4.0).prop_map(|b| MultiplierSpec::higher_order(b).unwrap()),
                (
                    0.0f64..2.0,
                    proptest::collection::vec(((0.05f64..3.0), (0.05f64..4.0)), 1..4)
                )
                    .prop_map(|(drift, raw)| {
                        let atoms = raw
                            .into_iter()
                            .map(|(w, y)| BernsteinAtom { w, y })
                            .collect();
                        MultiplierSpec::bernstein(drift, atoms).unwrap()
                    }),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            /// Strict growth, window consistency, and gap consistency hold
            /// for arbitrary admissible parameters, not just the defaults.
            #[test]
            fn monotone_window_and_gaps(spec in arbitrary_spec(), u in 0.0f64..2.0) {
                let w = spec.window();
                prop_assert!(w.lo < w.hi);
                prop_assert_eq!(w.lo, spec.eval(0.0));
                prop_assert_eq!(w.hi, spec.eval(2.0));

                let mut prev = w.lo;
                for i in 1..=64 {
                    let x = 2.0 * i as f64 / 64.0;
                    let v = spec.eval(x);
                    prop_assert!(v > prev, "not increasing at {}", x);
                    prev = v;
                }

                let rise = spec.rise_from_bottom(u);
                let drop = spec.drop_from_top(2.0 - u);
                prop_assert!((rise - (spec.eval(u) - w.lo)).abs() <= 1e-9 * (1.0 + rise));
                prop_assert!((drop - (w.hi - spec.eval(u))).abs() <= 1e-9 * (1.0 + drop));
            }

            /// The zero-mass relativistic entry is pointwise the fractional
            /// one for every stability index.
            #[test]
            fn massless_limit_for_all_alpha(alpha in 0.05f64..1.95, u in 0.0f64..2.0) {
                let massless = MultiplierSpec::relativistic(alpha, 0.0).unwrap();
                let fractional = MultiplierSpec::fractional(alpha).unwrap();
                prop_assert_eq!(massless.eval(u), fractional.eval(u));
                let e = massless.exponents();
                prop_assert_eq!(e.bottom, alpha / 2.0);
                prop_assert_eq!(e.top, 1.0);
            }

            /// Exact power laws regress to their exponent for any index.
            #[test]
            fn fractional_estimate_matches_exponent(alpha in 0.1f64..1.9) {
                let spec = MultiplierSpec::fractional(alpha).unwrap();
                let est = spec.estimate_exponents(40, 0.05).unwrap();
                prop_assert!((est.bottom - alpha / 2.0).abs() <= 0.05 * (alpha / 2.0));
                prop_assert!((est.top - 1.0).abs() <= 0.05);
            }
        }
    }
}
