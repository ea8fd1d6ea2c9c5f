//! Integral probability metrics `D_{p,Λ}` and their duality-gap
//! certification against the coupling functionals.
//!
//! `D_{p,Λ}(ν,μ) = sup{ ν(f) - μ(f) : ‖δf‖_q ≤ 1 }` with `q` conjugate to
//! `p`. Every reported value is certified *from below* by an explicit
//! witness function recovered from a Lipschitz LP; the matching upper bound
//! comes from the coupling side ([`crate::transport::q_p`]), and
//! [`duality_gap`] reports the sandwich width.

use crate::lattice::{lq_norm, ConfigSpace, LocalFunction, Volume};
use crate::measures::Measure;
use crate::solver::{LpProblem, RowKind};
use crate::transport::{q_p, PairGeometry, TransportCertificate};
use crate::{Error, Exponent, Result};

/// Site weights `α ⪰ 0` with `‖α‖_q ≤ 1`, the dual variables of the
/// Lipschitz constraint `δ_i f ≤ α_i`.
#[derive(Debug, Clone)]
pub struct AlphaWeights {
    volume: Volume,
    alpha: Vec<f64>,
    q: Exponent,
}

impl AlphaWeights {
    pub fn new(volume: Volume, alpha: Vec<f64>, q: Exponent) -> Result<Self> {
        if alpha.len() != volume.len() {
            return Err(Error::Domain("one weight per site required".into()));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Domain("alpha weights must be nonnegative".into()));
        }
        if lq_norm(&alpha, q) > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "‖α‖_q = {} exceeds 1",
                lq_norm(&alpha, q)
            )));
        }
        Ok(AlphaWeights { volume, alpha, q })
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }

    pub fn q(&self) -> Exponent {
        self.q
    }

    pub fn norm(&self) -> f64 {
        lq_norm(&self.alpha, self.q)
    }
}

/// A feasible IPM witness: a local function together with its certified
/// oscillation norm `‖δf‖_q ≤ 1`.
#[derive(Debug, Clone)]
pub struct WitnessFunction {
    pub f: LocalFunction,
    pub certified_norm: f64,
}

/// Result of a `D_{p,Λ}` evaluation: the value is certified from below by
/// the witness; `upper_bound`/`gap` carry the coupling-side sandwich.
#[derive(Debug, Clone)]
pub struct DpResult {
    pub p: Exponent,
    pub value: f64,
    pub alpha: AlphaWeights,
    pub witness: WitnessFunction,
    pub upper_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Push all single-site Lipschitz rows `f(σ) - f(σ̃) ≤ bound(site)` into an
/// LP. `f` variables are `0..N`; bounds are given per volume position, as a
/// variable index (`Some`) or a constant (`None` + `constant`).
fn add_lipschitz_rows(
    lp: &mut LpProblem,
    space: &ConfigSpace,
    alpha_var: impl Fn(usize) -> Option<usize>,
    alpha_const: impl Fn(usize) -> f64,
) {
    let s = space.alphabet_size();
    for pos in 0..space.num_sites() {
        let stride = space.stride(pos);
        for base in space.contexts(pos) {
            for a in 0..s {
                for b in 0..s {
                    if a == b {
                        continue;
                    }
                    let x = base + a * stride;
                    let y = base + b * stride;
                    match alpha_var(pos) {
                        Some(v) => {
                            lp.add_row(
                                RowKind::Le,
                                vec![(x, 1.0), (y, -1.0), (v, -1.0)],
                                0.0,
                            );
                        }
                        None => {
                            lp.add_row(
                                RowKind::Le,
                                vec![(x, 1.0), (y, -1.0)],
                                alpha_const(pos),
                            );
                        }
                    }
                }
            }
        }
    }
}

fn difference_objective(lp: &mut LpProblem, mu: &Measure, nu: &Measure) {
    for x in 0..mu.space().state_count() {
        lp.set_objective(x, nu.prob(x) - mu.prob(x));
        lp.mark_free(x);
    }
}

/// `sup { (ν-μ)(f) : f(σ)-f(σ') ≤ d_α(σ,σ') }` for fixed weights, as a
/// pure LP over the `f` table (single-site rows suffice: they are exactly
/// `δ_i f ≤ α_i`, which implies the full pairwise constraint).
///
/// When some `α_i = 0` the rows force the witness to be constant across
/// site-`i` changes. By Kantorovich–Rubinstein duality the value matches
/// `solve_ot(μ, ν, d_α)`; the two routes stay independent so tests can
/// compare them.
pub fn d_p_fixed_alpha(
    mu: &Measure,
    nu: &Measure,
    alpha: &AlphaWeights,
) -> Result<(f64, WitnessFunction)> {
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch);
    }
    if alpha.volume() != mu.space().volume() {
        return Err(Error::Domain("alpha volume mismatch".into()));
    }
    let space = mu.space().clone();
    let n = space.state_count();
    let mut lp = LpProblem::new(n);
    difference_objective(&mut lp, mu, nu);
    add_lipschitz_rows(&mut lp, &space, |_| None, |pos| alpha.values()[pos]);
    let sol = lp.solve()?;
    let f = LocalFunction::new(space, sol.x)?;
    let certified_norm = f.osc_norm(alpha.q());
    Ok((sol.value, WitnessFunction { f, certified_norm }))
}

/// `D_{p,Λ}(ν, μ)` with an explicit witness.
///
/// - `p = 1`: one LP with `δ_i f ≤ 1` for all `i`;
/// - `p = ∞`: one LP over `(f, α)` with `δ_i f ≤ α_i`, `Σ α_i ≤ 1`
///   (the Dobrushin distance);
/// - `1 < p < ∞`: projected supergradient ascent of the concave map
///   `α ↦ OT(d_α)` over `K_q`, interleaved with the closed-form alignment
///   update, then witness recovery at the best `α`.
pub fn d_p(mu: &Measure, nu: &Measure, p: Exponent) -> Result<DpResult> {
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = mu.space().clone();
    let q = p.conjugate();
    let sites = space.num_sites();

    if mu.probs() == nu.probs() {
        // D(μ, μ) is 0 by definition; constants are excluded from the sup
        let f = LocalFunction::constant(space.clone(), 0.0)?;
        return Ok(DpResult {
            p,
            value: 0.0,
            alpha: AlphaWeights::new(space.volume().clone(), vec![0.0; sites], q)?,
            witness: WitnessFunction {
                f,
                certified_norm: 0.0,
            },
            upper_bound: 0.0,
            gap: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    match p {
        Exponent::Finite(_) if p.is_one() => {
            let alpha = AlphaWeights::new(space.volume().clone(), vec![1.0; sites], q)?;
            let (value, witness) = d_p_fixed_alpha(mu, nu, &alpha)?;
            let witness = rescale_witness(witness, q);
            Ok(DpResult {
                p,
                value,
                alpha,
                witness,
                upper_bound: value,
                gap: 0.0,
                iterations: 1,
                converged: true,
            })
        }
        Exponent::Infinity => d_infinity_lp(mu, nu),
        Exponent::Finite(_) => d_p_ascent(mu, nu, p),
    }
}

/// `p = ∞` as one LP: variables `(f, α)`, constraints `δ_i f ≤ α_i` and
/// `Σ_i α_i ≤ 1`.
fn d_infinity_lp(mu: &Measure, nu: &Measure) -> Result<DpResult> {
    let space = mu.space().clone();
    let n = space.state_count();
    let sites = space.num_sites();
    let mut lp = LpProblem::new(n + sites);
    difference_objective(&mut lp, mu, nu);
    add_lipschitz_rows(&mut lp, &space, |pos| Some(n + pos), |_| 0.0);
    lp.add_row(
        RowKind::Le,
        (0..sites).map(|i| (n + i, 1.0)).collect(),
        1.0,
    );
    let sol = lp.solve()?;
    let mut alpha_values: Vec<f64> = sol.x[n..].iter().map(|a| a.max(0.0)).collect();
    let total: f64 = alpha_values.iter().sum();
    if total > 1.0 {
        alpha_values.iter_mut().for_each(|a| *a /= total);
    }
    let alpha = AlphaWeights::new(space.volume().clone(), alpha_values, Exponent::ONE)?;
    let f = LocalFunction::new(space, sol.x[..n].to_vec())?;
    let witness = rescale_witness(
        WitnessFunction {
            certified_norm: f.osc_norm(Exponent::ONE),
            f,
        },
        Exponent::ONE,
    );
    // the reported value is what the (possibly rescaled) witness attains,
    // so it stays certified from below even under solver noise
    let value = nu.expectation(&witness.f)? - mu.expectation(&witness.f)?;
    Ok(DpResult {
        p: Exponent::Infinity,
        value,
        alpha,
        witness,
        upper_bound: sol.value,
        gap: (sol.value - value).abs(),
        iterations: 1,
        converged: true,
    })
}

const ASCENT_MAX_ITER: usize = 500;

/// Projected supergradient ascent over `K_q` for `1 < p < ∞`. The
/// supergradient of `φ(α) = OT(d_α)` at `α` is the disagreement vector of
/// the optimal plan; the alignment update `α ← m^{p-1}/‖m‖_p^{p-1}` is the
/// exact best response and is interleaved every other step.
fn d_p_ascent(mu: &Measure, nu: &Measure, p: Exponent) -> Result<DpResult> {
    let space = mu.space().clone();
    let q = p.conjugate();
    let sites = space.num_sites();
    let (geometry, mut solver) = PairGeometry::new(mu, nu)?;
    let mut cost = Vec::new();

    let project = |alpha: &mut Vec<f64>| {
        for a in alpha.iter_mut() {
            *a = a.max(0.0);
        }
        let norm = lq_norm(alpha, q);
        if norm > 1.0 {
            alpha.iter_mut().for_each(|a| *a /= norm);
        }
    };

    let uniform = (1.0 / (sites as f64)).powf(1.0 / q.as_f64());
    let mut alpha = vec![uniform; sites];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_alpha = alpha.clone();
    let mut best_upper = f64::INFINITY;
    let mut iterations = 0usize;

    for k in 1..=ASCENT_MAX_ITER {
        iterations = k;
        geometry.fill_weighted_hamming_cost(&alpha, &mut cost);
        let sol = solver.solve(&cost)?;
        if sol.value > best_value {
            best_value = sol.value;
            best_alpha = alpha.clone();
        }
        let m = geometry.disagreement_from_arcs(&sol.arcs);
        best_upper = best_upper.min(lq_norm(&m, p));
        if best_upper - best_value <= 1e-10 {
            break;
        }
        if k % 2 == 0 {
            // supergradient step with 1/√k schedule
            let step = 1.0 / (k as f64).sqrt();
            for (a, g) in alpha.iter_mut().zip(&m) {
                *a += step * g;
            }
            project(&mut alpha);
        } else {
            // closed-form alignment (best response to the current plan)
            alpha = crate::transport::saddle::align_alpha(&m, p);
            project(&mut alpha);
        }
    }

    let alpha = AlphaWeights::new(space.volume().clone(), best_alpha, q)?;
    let (lp_value, witness) = d_p_fixed_alpha(mu, nu, &alpha)?;
    let witness = rescale_witness(witness, q);
    let value = best_value.max(lp_value);
    Ok(DpResult {
        p,
        value,
        alpha,
        witness,
        upper_bound: best_upper,
        gap: best_upper - value,
        iterations,
        converged: best_upper - value <= 1e-8,
    })
}

/// Guarantee feasibility of the returned witness independently of solver
/// noise: rescale by `1/max(‖δf‖_q, 1)`.
fn rescale_witness(witness: WitnessFunction, q: Exponent) -> WitnessFunction {
    let norm = witness.f.osc_norm(q);
    if norm > 1.0 {
        let f = witness.f.scaled(1.0 / norm);
        let certified_norm = f.osc_norm(q);
        WitnessFunction { f, certified_norm }
    } else {
        witness
    }
}

/// Joint certificate for `|D_p - Q_p|`: the coupling upper bound against
/// the IPM lower bound, with both certificates attached.
#[derive(Debug, Clone)]
pub struct DualityGapReport {
    pub p: Exponent,
    pub q_certificate: TransportCertificate,
    pub d_result: DpResult,
    pub gap: f64,
    pub within_tolerance: bool,
}

/// Duality-gap tolerance of the finite-volume identity `D_p = Q_p`.
pub const DUALITY_GAP_TOL: f64 = 1e-6;

pub fn duality_gap(mu: &Measure, nu: &Measure, p: Exponent) -> Result<DualityGapReport> {
    let q_certificate = q_p(mu, nu, p)?;
    let d_result = d_p(mu, nu, p)?;
    // D_p from below, Q_p from above; both certified. The maximum of the
    // two lower bounds (IPM witness, coupling dual) tightens the sandwich.
    let lower = d_result.value.max(q_certificate.value_lower);
    let gap = (q_certificate.value_upper - lower).abs();
    Ok(DualityGapReport {
        p,
        within_tolerance: gap <= DUALITY_GAP_TOL,
        q_certificate,
        d_result,
        gap,
    })
}

/// `D_p(ν,μ) ≤ |dep|^{1/p}` with `dep ⊆ Λ`: plug-in bound check.
pub fn dep_bound_check(mu: &Measure, nu: &Measure, p: Exponent) -> Result<bool> {
    let d = d_p(mu, nu, p)?;
    let bound = match p {
        Exponent::Infinity => 1.0,
        _ => (mu.space().num_sites() as f64).powf(1.0 / p.as_f64()),
    };
    Ok(d.value <= bound + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Volume;
    use crate::measures::ProcessSpec;
    use crate::sampling::{random_measure, rng_from_seed};
    use crate::transport::{solve_ot, CostMatrix};

    fn ber(p: f64, sites: i64) -> Measure {
        ProcessSpec::bernoulli(p)
            .unwrap()
            .realize(&Volume::interval(0, sites - 1).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_alpha_only_allows_constants() {
        let mu = ber(0.2, 2);
        let nu = ber(0.7, 2);
        let alpha = AlphaWeights::new(
            mu.space().volume().clone(),
            vec![0.0, 0.0],
            Exponent::TWO,
        )
        .unwrap();
        let (value, witness) = d_p_fixed_alpha(&mu, &nu, &alpha).unwrap();
        assert!(value.abs() < 1e-10);
        assert!(witness.f.osc_norm(Exponent::ONE) < 1e-10);
    }

    #[test]
    fn single_site_unit_alpha_recovers_total_variation() {
        let mu = ber(0.2, 1);
        let nu = ber(0.5, 1);
        let alpha = AlphaWeights::new(
            mu.space().volume().clone(),
            vec![1.0],
            Exponent::Infinity,
        )
        .unwrap();
        let (value, witness) = d_p_fixed_alpha(&mu, &nu, &alpha).unwrap();
        assert!((value - 0.3).abs() < 1e-9);
        assert!(witness.certified_norm <= 1.0 + 1e-9);
    }

    #[test]
    fn fixed_alpha_lp_matches_transport_value() {
        let mut rng = rng_from_seed(17);
        use rand::Rng;
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        for _ in 0..10 {
            let mu = random_measure(&space, &mut rng).unwrap();
            let nu = random_measure(&space, &mut rng).unwrap();
            let raw: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..1.0)).collect();
            let norm = lq_norm(&raw, Exponent::TWO).max(1e-9);
            let alpha_values: Vec<f64> = raw.iter().map(|a| a / norm).collect();
            let alpha = AlphaWeights::new(
                space.volume().clone(),
                alpha_values.clone(),
                Exponent::TWO,
            )
            .unwrap();
            let (lp_value, witness) = d_p_fixed_alpha(&mu, &nu, &alpha).unwrap();
            let cost = CostMatrix::weighted_hamming(&space, &alpha_values).unwrap();
            let ot = solve_ot(&mu, &nu, &cost).unwrap();
            assert!(
                (lp_value - ot.value).abs() < 1e-8,
                "KR duality: LP {} vs OT {}",
                lp_value,
                ot.value
            );
            // witness attains the value
            let attained = nu.expectation(&witness.f).unwrap() - mu.expectation(&witness.f).unwrap();
            assert!((attained - lp_value).abs() < 1e-9);
        }
    }

    #[test]
    fn witness_constant_across_zero_alpha_site() {
        let mu = ber(0.25, 2);
        let nu = ber(0.65, 2);
        let alpha = AlphaWeights::new(
            mu.space().volume().clone(),
            vec![0.0, 1.0],
            Exponent::Infinity,
        )
        .unwrap();
        let (_, witness) = d_p_fixed_alpha(&mu, &nu, &alpha).unwrap();
        let osc = witness.f.oscillation_vector();
        assert!(osc.deltas()[0] < 1e-10, "witness must ignore the zero-α site");
    }

    #[test]
    fn d_p_equals_zero_for_identical_measures() {
        let mu = ber(0.3, 2);
        for p in [Exponent::ONE, Exponent::TWO, Exponent::Infinity] {
            let r = d_p(&mu, &mu, p).unwrap();
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn d_1_matches_hamming_w1_tensorization() {
        let mu = ber(0.5, 2);
        let nu = ber(0.2, 2);
        let r = d_p(&nu, &mu, Exponent::ONE).unwrap();
        assert!((r.value - 0.6).abs() < 1e-9, "{}", r.value);
        assert!(r.witness.certified_norm <= 1.0 + 1e-9);
    }

    #[test]
    fn d_2_product_instance_matches_q_2() {
        let mu = ber(0.5, 2);
        let nu = ber(0.2, 2);
        let r = d_p(&mu, &nu, Exponent::TWO).unwrap();
        let expect = 2.0_f64.sqrt() * 0.3;
        assert!((r.value - expect).abs() < 1e-7, "{}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn duality_gap_closes_on_random_instances() {
        let mut rng = rng_from_seed(gap_seed());
        for (alphabet, sites) in [(2usize, 2i64), (3, 2)] {
            let space =
                ConfigSpace::new(Volume::interval(0, sites - 1).unwrap(), alphabet).unwrap();
            for _ in 0..6 {
                let mu = random_measure(&space, &mut rng).unwrap();
                let nu = random_measure(&space, &mut rng).unwrap();
                for p in [
                    Exponent::ONE,
                    Exponent::rational(3, 2).unwrap(),
                    Exponent::TWO,
                    Exponent::integer(5).unwrap(),
                    Exponent::Infinity,
                ] {
                    let report = duality_gap(&mu, &nu, p).unwrap();
                    assert!(
                        report.within_tolerance,
                        "gap {} at p={p} (|S|={alphabet}, |Λ|={sites})",
                        report.gap
                    );
                }
            }
        }
    }

    fn gap_seed() -> u64 {
        20_240_801
    }

    #[test]
    fn d_p_never_exceeds_q_p_before_gap_closure() {
        let mut rng = rng_from_seed(606);
        let space = ConfigSpace::new(Volume::interval(0, 2).unwrap(), 2).unwrap();
        for _ in 0..6 {
            let mu = random_measure(&space, &mut rng).unwrap();
            let nu = random_measure(&space, &mut rng).unwrap();
            for p in [Exponent::rational(3, 2).unwrap(), Exponent::TWO] {
                let d = d_p(&mu, &nu, p).unwrap();
                let q = q_p(&mu, &nu, p).unwrap();
                assert!(d.value <= q.value_upper + 1e-8);
            }
        }
    }

    #[test]
    fn d_p_symmetry_and_triangle() {
        let mut rng = rng_from_seed(88);
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        for _ in 0..5 {
            let a = random_measure(&space, &mut rng).unwrap();
            let b = random_measure(&space, &mut rng).unwrap();
            let c = random_measure(&space, &mut rng).unwrap();
            for p in [Exponent::TWO, Exponent::Infinity] {
                let ab = d_p(&a, &b, p).unwrap().value;
                let ba = d_p(&b, &a, p).unwrap().value;
                assert!((ab - ba).abs() < 1e-6);
                let ac = d_p(&a, &c, p).unwrap().value;
                let cb = d_p(&c, &b, p).unwrap().value;
                assert!(ac + cb >= ab - 1e-6);
            }
        }
    }

    #[test]
    fn dobrushin_lp_certificate_on_forced_tradeoff() {
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        let mu = Measure::new(space.clone(), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let nu = Measure::new(space.clone(), vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let r = d_p(&mu, &nu, Exponent::Infinity).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8);
        assert!(r.witness.certified_norm <= 1.0 + 1e-9);
        assert!(r.alpha.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn dep_bound_holds() {
        let mut rng = rng_from_seed(314);
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 3).unwrap();
        for _ in 0..4 {
            let mu = random_measure(&space, &mut rng).unwrap();
            let nu = random_measure(&space, &mut rng).unwrap();
            for p in [Exponent::ONE, Exponent::TWO, Exponent::Infinity] {
                assert!(dep_bound_check(&mu, &nu, p).unwrap());
            }
        }
    }
}
