//! The confidence degree model: per-(subspace, action) trust weights computed
//! from Q estimates and their confidence intervals, and the fusion of
//! subspace and full-space policies into one action distribution.
//!
//! A subspace earns a high confidence degree when its interval is much
//! tighter than the full-space's (it has seen more aggregate experience) and
//! its Q estimate is consistent with the full-space's (aliasing is not
//! distorting it). Degrees above 1 let the subspace's choice probability
//! replace the full-space's for that action.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CdmError {
    #[error("epsilon-greedy needs at least one action")]
    EmptyActionSet,
    #[error("epsilon {0} outside [0, 1]")]
    BadEpsilon(f64),
    #[error("policy rows must share one action count")]
    RaggedRows,
    #[error("fused probabilities sum to zero")]
    ZeroMass,
}

/// Inverse error function. Accurate to well under 1e-7 across
/// `(-1 + 1e-9, 1 - 1e-9)`; arguments at or beyond ±1 return the matching
/// signed infinity, which downstream arithmetic treats as a sentinel.
pub fn erfinv(x: f64) -> f64 {
    if x <= -1.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 {
        return f64::INFINITY;
    }
    statrs::function::erf::erf_inv(x)
}

/// A closed interval of Q-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    lo: f64,
    hi: f64,
}

impl ConfidenceInterval {
    /// Builds the interval spanning both endpoints, whatever their order.
    /// Bound tables are refreshed independently, so a transiently inverted
    /// pair must not produce a negative length.
    pub fn spanning(a: f64, b: f64) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Interval length `hi - lo`.
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Intersection, if any. Intervals sharing a single point intersect with
    /// length zero.
    pub fn intersect(&self, other: &ConfidenceInterval) -> Option<ConfidenceInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(ConfidenceInterval { lo, hi })
        } else {
            None
        }
    }
}

/// Selectable length-quantity function `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthFn {
    /// 0 for ratios at most 1, the ratio itself above 1.
    #[default]
    ThresholdRamp,
    /// The raw ratio.
    Ratio,
}

impl LengthFn {
    fn apply(self, t: f64) -> f64 {
        match self {
            LengthFn::ThresholdRamp => {
                if t <= 1.0 {
                    0.0
                } else {
                    t
                }
            }
            LengthFn::Ratio => t,
        }
    }
}

/// Selectable overlap-distance function `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapFn {
    /// `-erfinv(2t - 1)` up to t = 1/2, then 0.
    #[default]
    NegErfInv,
    /// 1 below t = 1/2, 0 above.
    HardCutoff,
}

impl OverlapFn {
    fn apply(self, t: f64) -> f64 {
        match self {
            OverlapFn::NegErfInv => {
                if t <= 0.5 {
                    -erfinv(2.0 * t - 1.0)
                } else {
                    0.0
                }
            }
            OverlapFn::HardCutoff => {
                if t <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The pair of shaping functions the confidence degree multiplies together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CdmFunctions {
    pub f: LengthFn,
    pub g: OverlapFn,
}

/// A nonnegative trust weight; `f64::INFINITY` is the sentinel for an
/// unbounded degree (it wins every comparison against 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceDegree(pub f64);

/// How much tighter the subspace interval is than the full-space one:
/// `f(|ci_full| / |ci_sub|)`. A zero-length subspace interval against a
/// positive full-space one yields the infinity sentinel; two zero-length
/// intervals yield 0.
pub fn length_quantity(ci_full: ConfidenceInterval, ci_sub: ConfidenceInterval) -> f64 {
    length_quantity_with(LengthFn::default(), ci_full, ci_sub)
}

pub fn length_quantity_with(
    f: LengthFn,
    ci_full: ConfidenceInterval,
    ci_sub: ConfidenceInterval,
) -> f64 {
    let lf = ci_full.length();
    let ls = ci_sub.length();
    if ls == 0.0 {
        return if lf > 0.0 { f64::INFINITY } else { 0.0 };
    }
    f.apply(lf / ls)
}

/// How consistent the two Q estimates are, given that their intervals
/// overlap: `g(|q_full - q_sub| / |ci_full ∩ ci_sub|)`. Agreement on a
/// point (zero distance, zero overlap) yields the infinity sentinel; any
/// distance across a zero-length overlap yields 0.
pub fn overlap_distance_quantity(
    q_full: f64,
    q_sub: f64,
    ci_full: ConfidenceInterval,
    ci_sub: ConfidenceInterval,
) -> f64 {
    overlap_distance_quantity_with(OverlapFn::default(), q_full, q_sub, ci_full, ci_sub)
}

pub fn overlap_distance_quantity_with(
    g: OverlapFn,
    q_full: f64,
    q_sub: f64,
    ci_full: ConfidenceInterval,
    ci_sub: ConfidenceInterval,
) -> f64 {
    let overlap = match ci_full.intersect(&ci_sub) {
        Some(o) => o.length(),
        None => {
            debug_assert!(false, "caller must rule out disjoint intervals");
            return 0.0;
        }
    };
    let distance = (q_full - q_sub).abs();
    if overlap == 0.0 {
        return if distance == 0.0 { f64::INFINITY } else { 0.0 };
    }
    g.apply(distance / overlap)
}

/// The confidence degree of one (subspace state, action) against its
/// full-space counterpart: 0 when the intervals are disjoint, otherwise the
/// product of the length and overlap-distance quantities. A zero factor
/// always wins over an infinite one.
pub fn confidence_degree(
    q_full: f64,
    q_sub: f64,
    ci_full: ConfidenceInterval,
    ci_sub: ConfidenceInterval,
) -> ConfidenceDegree {
    confidence_degree_with(CdmFunctions::default(), q_full, q_sub, ci_full, ci_sub)
}

pub fn confidence_degree_with(
    fns: CdmFunctions,
    q_full: f64,
    q_sub: f64,
    ci_full: ConfidenceInterval,
    ci_sub: ConfidenceInterval,
) -> ConfidenceDegree {
    if ci_full.intersect(&ci_sub).is_none() {
        return ConfidenceDegree(0.0);
    }
    let f = length_quantity_with(fns.f, ci_full, ci_sub);
    let g = overlap_distance_quantity_with(fns.g, q_full, q_sub, ci_full, ci_sub);
    if f == 0.0 || g == 0.0 {
        return ConfidenceDegree(0.0);
    }
    ConfidenceDegree(f * g)
}

/// The epsilon-greedy choice probabilities over one Q row: the greedy set
/// (exact argmax ties included) splits `1 - epsilon` evenly, and every
/// action additionally receives `epsilon / |A|`.
pub fn epsilon_greedy_probs(q_row: &[f64], epsilon: f64) -> Result<Vec<f64>, CdmError> {
    if q_row.is_empty() {
        return Err(CdmError::EmptyActionSet);
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(CdmError::BadEpsilon(epsilon));
    }
    let best = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = q_row.iter().filter(|&&q| q == best).count();
    let uniform = epsilon / q_row.len() as f64;
    let greedy_share = (1.0 - epsilon) / ties as f64;
    Ok(q_row
        .iter()
        .map(|&q| uniform + if q == best { greedy_share } else { 0.0 })
        .collect())
}

/// The subspace whose degree wins for one action, provided it clears the
/// trust threshold of 1. Ties go to the earliest subspace in declaration
/// order. Infinite degrees clear the threshold.
pub fn winning_subspace(cds: &[Vec<ConfidenceDegree>], action: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (x, row) in cds.iter().enumerate() {
        let cd = row[action].0;
        match best {
            Some((_, b)) if cd <= b => {}
            _ => best = Some((x, cd)),
        }
    }
    match best {
        Some((x, cd)) if cd > 1.0 => Some(x),
        _ => None,
    }
}

/// Fuses the per-space epsilon-greedy rows into one action distribution:
/// each action takes its probability from the winning subspace if that
/// subspace's degree exceeds 1, otherwise from the full-space, and the
/// result is normalized. With no subspaces (or all degrees at most 1) this
/// returns the full-space row unchanged.
pub fn fuse(
    full_probs: &[f64],
    sub_probs: &[Vec<f64>],
    cds: &[Vec<ConfidenceDegree>],
) -> Result<Vec<f64>, CdmError> {
    let num_actions = full_probs.len();
    if num_actions == 0 {
        return Err(CdmError::EmptyActionSet);
    }
    if sub_probs.len() != cds.len()
        || sub_probs.iter().any(|r| r.len() != num_actions)
        || cds.iter().any(|r| r.len() != num_actions)
    {
        return Err(CdmError::RaggedRows);
    }
    let mut unnormalized = Vec::with_capacity(num_actions);
    let mut any_subspace = false;
    for a in 0..num_actions {
        match winning_subspace(cds, a) {
            Some(x) => {
                unnormalized.push(sub_probs[x][a]);
                any_subspace = true;
            }
            None => unnormalized.push(full_probs[a]),
        }
    }
    if !any_subspace {
        // exact fall-through to the full-space policy
        return Ok(full_probs.to_vec());
    }
    let total: f64 = unnormalized.iter().sum();
    if total <= 0.0 {
        return Err(CdmError::ZeroMass);
    }
    for p in &mut unnormalized {
        *p /= total;
    }
    Ok(unnormalized)
}

/// The per-space decision weights behind one fused choice: for each
/// subspace, the fraction of actions whose probability it supplied; the
/// full-space takes the remainder. Returned as `[subspaces..., full]`,
/// summing to exactly 1.
pub fn decision_weights(cds: &[Vec<ConfidenceDegree>], num_actions: usize) -> Vec<f64> {
    let mut counts = vec![0usize; cds.len()];
    for a in 0..num_actions {
        if let Some(x) = winning_subspace(cds, a) {
            counts[x] += 1;
        }
    }
    let mut weights: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / num_actions as f64)
        .collect();
    let sub_total: f64 = weights.iter().sum();
    weights.push(1.0 - sub_total);
    weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ci(lo: f64, hi: f64) -> ConfidenceInterval {
        ConfidenceInterval::spanning(lo, hi)
    }

    const ERFINV_08: f64 = 0.906193802436823220071162703096;

    #[test]
    fn erfinv_reference_points() {
        assert_eq!(erfinv(0.0), 0.0);
        assert!((erfinv(0.8) - ERFINV_08).abs() < 1e-9);
        assert!((erfinv(0.8) - 0.9061938).abs() < 1e-7);
        assert_eq!(erfinv(1.0), f64::INFINITY);
        assert_eq!(erfinv(-1.0), f64::NEG_INFINITY);
        assert_eq!(erfinv(1.5), f64::INFINITY);
    }

    #[test]
    fn erfinv_is_odd() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((erfinv(x) + erfinv(-x)).abs() < 1e-12);
        }
    }

    #[test]
    fn length_quantity_reference_points() {
        assert_eq!(length_quantity(ci(0.0, 10.0), ci(0.0, 2.0)), 5.0);
        assert_eq!(length_quantity(ci(0.0, 1.0), ci(0.0, 2.0)), 0.0);
        assert_eq!(length_quantity(ci(0.0, 2.0), ci(5.0, 7.0)), 0.0);
        assert_eq!(length_quantity(ci(0.0, 1.0), ci(3.0, 3.0)), f64::INFINITY);
        assert_eq!(length_quantity(ci(2.0, 2.0), ci(3.0, 3.0)), 0.0);
    }

    #[test]
    fn overlap_distance_reference_points() {
        // distance 0.2 over overlap 2 -> t = 0.1 -> erfinv(0.8)
        let g = overlap_distance_quantity(3.2, 3.0, ci(0.0, 10.0), ci(2.0, 4.0));
        assert!((g - ERFINV_08).abs() < 1e-7);
        // t exactly 1/2 -> -erfinv(0) = 0
        assert_eq!(overlap_distance_quantity(1.0, 0.0, ci(0.0, 2.0), ci(0.0, 2.0)), 0.0);
        // t above 1/2 -> 0
        assert_eq!(overlap_distance_quantity(1.2, 0.0, ci(0.0, 2.0), ci(0.0, 2.0)), 0.0);
        // agreement on a single shared point
        assert_eq!(
            overlap_distance_quantity(2.0, 2.0, ci(0.0, 2.0), ci(2.0, 4.0)),
            f64::INFINITY
        );
        // distance across a single shared point
        assert_eq!(overlap_distance_quantity(1.0, 3.0, ci(0.0, 2.0), ci(2.0, 4.0)), 0.0);
    }

    #[test]
    fn confidence_degree_reference_points() {
        assert_eq!(confidence_degree(0.5, 2.5, ci(0.0, 1.0), ci(2.0, 3.0)).0, 0.0);

        let cd = confidence_degree(3.2, 3.0, ci(0.0, 10.0), ci(2.0, 4.0)).0;
        assert!((cd - 5.0 * ERFINV_08).abs() < 1e-6);
        assert!((cd - 4.53097).abs() < 1e-5);

        // |q_full - q_sub| = 2 over overlap 2 -> t = 1 -> g = 0
        assert_eq!(confidence_degree(5.0, 3.0, ci(0.0, 10.0), ci(2.0, 4.0)).0, 0.0);
    }

    #[test]
    fn sentinel_products_follow_the_gating_rules() {
        // f infinite (point subspace interval), g positive
        let cd = confidence_degree(3.0, 3.0, ci(0.0, 10.0), ci(3.0, 3.0));
        assert_eq!(cd.0, f64::INFINITY);
        // f zero (equal lengths), g infinite (exact agreement): no length
        // evidence means no trust
        let cd = confidence_degree(3.0, 3.0, ci(0.0, 6.0), ci(0.0, 6.0));
        assert_eq!(cd.0, 0.0);
        // both intervals are points at the same value
        let cd = confidence_degree(3.0, 3.0, ci(3.0, 3.0), ci(3.0, 3.0));
        assert_eq!(cd.0, 0.0);
    }

    #[test]
    fn degree_is_shift_invariant() {
        let base = confidence_degree(3.2, 3.0, ci(0.0, 10.0), ci(2.0, 4.0)).0;
        for shift in [-7.5, -1.0, 2.25, 100.0] {
            let moved = confidence_degree(
                3.2 + shift,
                3.0 + shift,
                ci(0.0 + shift, 10.0 + shift),
                ci(2.0 + shift, 4.0 + shift),
            )
            .0;
            assert!((moved - base).abs() < 1e-9, "shift {shift}: {moved} vs {base}");
        }
    }

    #[test]
    fn shrinking_subspace_interval_never_decreases_f() {
        let full = ci(0.0, 10.0);
        let mut last = length_quantity(full, ci(4.0, 9.0));
        for hi in [8.0, 7.0, 6.0, 5.0, 4.5] {
            let now = length_quantity(full, ci(4.0, hi));
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn growing_distance_never_increases_g() {
        let full = ci(0.0, 10.0);
        let sub = ci(2.0, 4.0);
        let mut last = f64::INFINITY;
        for d in [0.0, 0.1, 0.4, 0.8, 1.0, 1.5] {
            let now = overlap_distance_quantity(3.0 + d, 3.0, full, sub);
            assert!(now <= last, "distance {d}: {now} > {last}");
            last = now;
        }
    }

    #[test]
    fn epsilon_greedy_reference_rows() {
        let probs = epsilon_greedy_probs(&[5.0, 1.0, 0.0, -2.0], 0.1).unwrap();
        assert_eq!(probs, vec![0.925, 0.025, 0.025, 0.025]);

        let uniform = epsilon_greedy_probs(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        assert!(uniform.iter().all(|&p| (p - 0.25).abs() < 1e-15));

        let tied = epsilon_greedy_probs(&[2.0, 2.0], 0.0).unwrap();
        assert_eq!(tied, vec![0.5, 0.5]);

        assert_eq!(epsilon_greedy_probs(&[], 0.1), Err(CdmError::EmptyActionSet));
        assert_eq!(
            epsilon_greedy_probs(&[1.0], 1.5),
            Err(CdmError::BadEpsilon(1.5))
        );
    }

    #[test]
    fn fuse_with_all_zero_degrees_is_the_full_row() {
        let full = vec![0.925, 0.025, 0.025, 0.025];
        let subs = vec![vec![0.25; 4]];
        let cds = vec![vec![ConfidenceDegree(0.0); 4]];
        let fused = fuse(&full, &subs, &cds).unwrap();
        assert_eq!(fused, full);
        // no subspaces at all behaves the same
        assert_eq!(fuse(&full, &[], &[]).unwrap(), full);
    }

    #[test]
    fn fuse_reference_arithmetic() {
        let full = vec![0.925, 0.025, 0.025, 0.025];
        let sub = vec![vec![0.025, 0.925, 0.025, 0.025]];
        let mut cds = vec![vec![ConfidenceDegree(0.0); 4]];
        cds[0][1] = ConfidenceDegree(2.0);
        let fused = fuse(&full, &sub, &cds).unwrap();
        let expect = [0.925 / 1.9, 0.925 / 1.9, 0.025 / 1.9, 0.025 / 1.9];
        for (got, want) in fused.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((fused[0] - 0.4868).abs() < 1e-4);
    }

    #[test]
    fn fusion_threshold_is_strict() {
        let full = vec![0.9, 0.1];
        let sub = vec![vec![0.1, 0.9]];
        let at_one = vec![vec![ConfidenceDegree(1.0); 2]];
        assert_eq!(fuse(&full, &sub, &at_one).unwrap(), full);
        let infinite = vec![vec![ConfidenceDegree(f64::INFINITY); 2]];
        assert_eq!(fuse(&full, &sub, &infinite).unwrap(), vec![0.1, 0.9]);
    }

    #[test]
    fn winning_subspace_ties_break_by_declaration_order() {
        let cds = vec![
            vec![ConfidenceDegree(3.0)],
            vec![ConfidenceDegree(3.0)],
        ];
        assert_eq!(winning_subspace(&cds, 0), Some(0));
    }

    #[test]
    fn decision_weight_reference_points() {
        let zero = vec![vec![ConfidenceDegree(0.0); 4]; 2];
        assert_eq!(decision_weights(&zero, 4), vec![0.0, 0.0, 1.0]);

        let mut all = vec![vec![ConfidenceDegree(0.0); 4]; 2];
        all[1] = vec![ConfidenceDegree(2.0); 4];
        assert_eq!(decision_weights(&all, 4), vec![0.0, 1.0, 0.0]);

        let mut one = vec![vec![ConfidenceDegree(0.0); 4]];
        one[0][2] = ConfidenceDegree(1.5);
        assert_eq!(decision_weights(&one, 4), vec![0.25, 0.75]);
    }

    proptest! {
        // fused output is always a probability vector
        #[test]
        fn fuse_outputs_probability_vectors(
            cd_values in proptest::collection::vec(0.0f64..3.0, 8),
            greedy_full in 0usize..4,
            greedy_sub in 0usize..4,
        ) {
            let mut q_full = [0.0; 4];
            q_full[greedy_full] = 1.0;
            let mut q_sub = [0.0; 4];
            q_sub[greedy_sub] = 1.0;
            let full = epsilon_greedy_probs(&q_full, 0.1).unwrap();
            let subs = vec![
                epsilon_greedy_probs(&q_sub, 0.1).unwrap(),
                epsilon_greedy_probs(&q_full, 0.1).unwrap(),
            ];
            let cds: Vec<Vec<ConfidenceDegree>> = cd_values
                .chunks(4)
                .map(|c| c.iter().map(|&v| ConfidenceDegree(v)).collect())
                .collect();
            let fused = fuse(&full, &subs, &cds).unwrap();
            prop_assert!(fused.iter().all(|&p| p >= 0.0));
            let total: f64 = fused.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        // weights sum exactly to one and stay in range
        #[test]
        fn decision_weights_partition_unity(
            cd_values in proptest::collection::vec(0.0f64..3.0, 12),
        ) {
            let cds: Vec<Vec<ConfidenceDegree>> = cd_values
                .chunks(4)
                .map(|c| c.iter().map(|&v| ConfidenceDegree(v)).collect())
                .collect();
            let w = decision_weights(&cds, 4);
            prop_assert_eq!(w.len(), 4);
            prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
            let total: f64 = w.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-15);
        }
    }
}
