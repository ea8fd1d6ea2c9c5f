//! Exact optimal transport over the transportation polytope and the
//! coupling functionals `Q_{p,Λ}`.
//!
//! `Q_{p,Λ}(μ,ν)` minimizes the `ℓ^p` norm of the per-site disagreement
//! vector `m_i(Π) = Π{σ_i ≠ σ'_i}` over couplings `Π` of `μ` and `ν`. For
//! `p = 1` this is the Hamming Kantorovich–Wasserstein distance and a single
//! LP; for `p > 1` the objective is convex but not linear, and [`q_p`]
//! certifies the value by sandwiching it between an explicit coupling and an
//! explicit dual weight vector (see [`saddle`]).

pub(crate) mod saddle;

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::lattice::{lq_norm, ConfigSpace, Volume};
use crate::measures::Measure;
use crate::solver::{TransportSolution, TransportationSolver};
use crate::{Error, Exponent, Result};

use saddle::{solve_saddle, SADDLE_MAX_ITER, SADDLE_TOL};

/// Coupling marginal tolerance.
pub const COUPLING_TOL: f64 = 1e-10;
/// Largest compressed `support(μ) × support(ν)` size fed to the dense
/// transportation simplex.
pub const OT_ENTRY_CAP: usize = 1 << 22;
/// Dense plans are materialized in certificates only below this state count.
const PLAN_MATERIALIZE_CAP: usize = 512;

/// Dense nonnegative cost table over `Ω_Λ × Ω_Λ`.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    space: ConfigSpace,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(space: ConfigSpace, entries: Vec<f64>) -> Result<Self> {
        let n = space.state_count();
        if entries.len() != n * n {
            return Err(Error::Domain("cost table must be |Ω|² entries".into()));
        }
        if entries.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Domain("cost entries must be finite and >= 0".into()));
        }
        Ok(CostMatrix { space, entries })
    }

    pub fn from_fn(space: ConfigSpace, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = space.state_count();
        let mut entries = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                entries.push(f(x, y));
            }
        }
        CostMatrix::new(space, entries)
    }

    /// Hamming distance `d^{(H)}_Λ(σ, σ') = #{i : σ_i ≠ σ'_i}`.
    pub fn hamming(space: &ConfigSpace) -> Result<Self> {
        Self::weighted_hamming(space, &vec![1.0; space.num_sites()])
    }

    /// Site-weighted Hamming cost `d_α(σ, σ') = Σ_i α_i 1{σ_i ≠ σ'_i}`,
    /// weights in volume order.
    pub fn weighted_hamming(space: &ConfigSpace, weights: &[f64]) -> Result<Self> {
        if weights.len() != space.num_sites() {
            return Err(Error::Domain("one weight per site required".into()));
        }
        Self::from_fn(space.clone(), |x, y| {
            (0..space.num_sites())
                .map(|pos| {
                    if space.digit(x, pos) != space.digit(y, pos) {
                        weights[pos]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
    }

    /// `d^{(H)}(σ, σ')^p`.
    pub fn hamming_power(space: &ConfigSpace, p: f64) -> Result<Self> {
        Self::from_fn(space.clone(), |x, y| {
            let d = (0..space.num_sites())
                .filter(|&pos| space.digit(x, pos) != space.digit(y, pos))
                .count() as f64;
            d.powf(p)
        })
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.space.state_count() + y]
    }
}

/// A coupling `Π ∈ 𝒞_Λ(μ, ν)`: a probability table over `Ω_Λ × Ω_Λ` whose
/// first-coordinate marginal is `μ` and second-coordinate marginal is `ν`.
#[derive(Debug, Clone)]
pub struct Coupling {
    space: ConfigSpace,
    joint: Vec<f64>,
    mu: Measure,
    nu: Measure,
}

impl Coupling {
    pub fn new(mu: Measure, nu: Measure, joint: Vec<f64>) -> Result<Self> {
        if mu.space() != nu.space() {
            return Err(Error::SpaceMismatch);
        }
        let space = mu.space().clone();
        let n = space.state_count();
        if joint.len() != n * n {
            return Err(Error::Domain("joint table must be |Ω|² entries".into()));
        }
        if joint.iter().any(|p| !p.is_finite() || *p < -COUPLING_TOL) {
            return Err(Error::Domain("joint entries must be nonnegative".into()));
        }
        let mut row = vec![0.0; n];
        let mut col = vec![0.0; n];
        for x in 0..n {
            for y in 0..n {
                let p = joint[x * n + y];
                row[x] += p;
                col[y] += p;
            }
        }
        for x in 0..n {
            if (row[x] - mu.prob(x)).abs() > COUPLING_TOL {
                return Err(Error::InfeasibleMarginals(format!(
                    "row marginal defect {} at state {x}",
                    row[x] - mu.prob(x)
                )));
            }
        }
        for y in 0..n {
            if (col[y] - nu.prob(y)).abs() > COUPLING_TOL {
                return Err(Error::InfeasibleMarginals(format!(
                    "column marginal defect {} at state {y}",
                    col[y] - nu.prob(y)
                )));
            }
        }
        Ok(Coupling {
            space,
            joint,
            mu,
            nu,
        })
    }

    /// The diagonal coupling of `μ` with itself.
    pub fn diagonal(mu: &Measure) -> Result<Self> {
        let n = mu.space().state_count();
        let mut joint = vec![0.0; n * n];
        for x in 0..n {
            joint[x * n + x] = mu.prob(x);
        }
        Coupling::new(mu.clone(), mu.clone(), joint)
    }

    /// The independent coupling `μ ⊗ ν`.
    pub fn product(mu: &Measure, nu: &Measure) -> Result<Self> {
        if mu.space() != nu.space() {
            return Err(Error::SpaceMismatch);
        }
        let n = mu.space().state_count();
        let mut joint = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                joint.push(mu.prob(x) * nu.prob(y));
            }
        }
        Coupling::new(mu.clone(), nu.clone(), joint)
    }

    fn from_arcs(mu: &Measure, nu: &Measure, arcs: &[(usize, usize, f64)]) -> Result<Self> {
        let n = mu.space().state_count();
        let mut joint = vec![0.0; n * n];
        for &(x, y, w) in arcs {
            joint[x * n + y] += w;
        }
        Coupling::new(mu.clone(), nu.clone(), joint)
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.joint[x * self.space.state_count() + y]
    }

    pub fn first_marginal(&self) -> &Measure {
        &self.mu
    }

    pub fn second_marginal(&self) -> &Measure {
        &self.nu
    }

    /// Disagreement marginals `m_i = Π{σ_i ≠ σ'_i}`.
    pub fn disagreement_marginals(&self) -> DisagreementMarginals {
        let n = self.space.state_count();
        let sites = self.space.num_sites();
        let mut m = vec![0.0; sites];
        for x in 0..n {
            for y in 0..n {
                let p = self.joint[x * n + y];
                if p != 0.0 {
                    for (pos, mi) in m.iter_mut().enumerate() {
                        if self.space.digit(x, pos) != self.space.digit(y, pos) {
                            *mi += p;
                        }
                    }
                }
            }
        }
        for mi in m.iter_mut() {
            *mi = mi.clamp(0.0, 1.0);
        }
        DisagreementMarginals {
            volume: self.space.volume().clone(),
            m,
        }
    }

    /// Coupling cost `Ψ(Π, Λ) = ‖m(Π)‖_p`; bounded by `|Λ|^{1/p}`.
    pub fn psi(&self, p: Exponent) -> f64 {
        self.disagreement_marginals().norm(p)
    }

    /// Expected cost `∫ c dΠ`.
    pub fn expected_cost(&self, cost: &CostMatrix) -> Result<f64> {
        if cost.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .joint
            .iter()
            .zip(&cost.entries)
            .map(|(p, c)| p * c)
            .sum())
    }

    /// Marginal of the pair measure on `sub × sub`.
    pub fn marginal_pair(&self, sub: &Volume) -> Result<Coupling> {
        let volume = self.space.volume();
        if !sub.is_subset_of(volume) {
            return Err(Error::Domain("pair marginal volume is not a subset".into()));
        }
        let sub_space = ConfigSpace::new(sub.clone(), self.space.alphabet_size())?;
        let positions: Vec<usize> = sub
            .sites()
            .iter()
            .map(|s| volume.index_of(s).expect("subset checked"))
            .collect();
        let n = self.space.state_count();
        let k = sub_space.state_count();
        let project = |state: usize| -> usize {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for &pos in &positions {
                idx += self.space.digit(state, pos) * stride;
                stride *= self.space.alphabet_size();
            }
            idx
        };
        let mut joint = vec![0.0; k * k];
        for x in 0..n {
            let px = project(x);
            for y in 0..n {
                let p = self.joint[x * n + y];
                if p != 0.0 {
                    joint[px * k + project(y)] += p;
                }
            }
        }
        Coupling::new(self.mu.marginal(sub)?, self.nu.marginal(sub)?, joint)
    }
}

/// Per-site disagreement probabilities of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct DisagreementMarginals {
    volume: Volume,
    m: Vec<f64>,
}

impl DisagreementMarginals {
    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn values(&self) -> &[f64] {
        &self.m
    }

    pub fn norm(&self, p: Exponent) -> f64 {
        lq_norm(&self.m, p)
    }
}

/// Support-compressed pair structure shared by the transport routines:
/// support states of both measures plus per-pair disagreement bitmasks.
pub(crate) struct PairGeometry {
    space: ConfigSpace,
    rows: Vec<usize>,
    cols: Vec<usize>,
    masks: Vec<u32>,
}

impl PairGeometry {
    pub(crate) fn new(mu: &Measure, nu: &Measure) -> Result<(Self, TransportationSolver)> {
        if mu.space() != nu.space() {
            return Err(Error::SpaceMismatch);
        }
        let space = mu.space().clone();
        if space.num_sites() > 32 {
            return Err(Error::Capacity {
                states: space.num_sites() as u128,
                cap: 32,
            });
        }
        let rows: Vec<usize> = (0..space.state_count())
            .filter(|&x| mu.prob(x) > 0.0)
            .collect();
        let cols: Vec<usize> = (0..space.state_count())
            .filter(|&y| nu.prob(y) > 0.0)
            .collect();
        if rows.len() * cols.len() > OT_ENTRY_CAP {
            return Err(Error::Capacity {
                states: (rows.len() * cols.len()) as u128,
                cap: OT_ENTRY_CAP as u64,
            });
        }
        let sites = space.num_sites();
        let mut masks = Vec::with_capacity(rows.len() * cols.len());
        for &x in &rows {
            for &y in &cols {
                let mut mask = 0u32;
                for pos in 0..sites {
                    if space.digit(x, pos) != space.digit(y, pos) {
                        mask |= 1 << pos;
                    }
                }
                masks.push(mask);
            }
        }
        let solver = TransportationSolver::new(
            rows.iter().map(|&x| mu.prob(x)).collect(),
            cols.iter().map(|&y| nu.prob(y)).collect(),
        )?;
        Ok((
            PairGeometry {
                space,
                rows,
                cols,
                masks,
            },
            solver,
        ))
    }

    pub(crate) fn num_sites(&self) -> usize {
        self.space.num_sites()
    }

    pub(crate) fn fill_weighted_hamming_cost(&self, weights: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.masks.len());
        for &mask in &self.masks {
            let mut c = 0.0;
            let mut bits = mask;
            while bits != 0 {
                c += weights[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            out.push(c);
        }
    }

    pub(crate) fn fill_hamming_power_cost(&self, p: f64, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.masks.len());
        for &mask in &self.masks {
            out.push((mask.count_ones() as f64).powf(p));
        }
    }

    /// Disagreement marginals of a sparse plan given in compressed indices.
    pub(crate) fn disagreement_from_arcs(&self, arcs: &[(usize, usize, f64)]) -> Vec<f64> {
        let mut m = vec![0.0; self.space.num_sites()];
        let ncols = self.cols.len();
        for &(i, j, w) in arcs {
            if w != 0.0 {
                let mut bits = self.masks[i * ncols + j];
                while bits != 0 {
                    m[bits.trailing_zeros() as usize] += w;
                    bits &= bits - 1;
                }
            }
        }
        for mi in m.iter_mut() {
            *mi = mi.clamp(0.0, 1.0);
        }
        m
    }

    /// Map compressed arcs back to original state indices.
    pub(crate) fn arcs_to_states(&self, arcs: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
        arcs.iter()
            .map(|&(i, j, w)| (self.rows[i], self.cols[j], w))
            .collect()
    }
}

/// Exact primal-dual optimal transport solution.
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub value: f64,
    pub plan: Coupling,
    /// Kantorovich potentials on the support of `μ` (by state index).
    pub row_potentials: Vec<(usize, f64)>,
    /// Kantorovich potentials on the support of `ν` (by state index).
    pub col_potentials: Vec<(usize, f64)>,
    pub duality_residual: f64,
}

/// Exact optimal transport between two tables under an arbitrary cost:
/// primal simplex on the (support-compressed) transportation polytope, with
/// the primal/dual agreement checked to 1e-9.
pub fn solve_ot(mu: &Measure, nu: &Measure, cost: &CostMatrix) -> Result<OtSolution> {
    if cost.space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let (geometry, mut solver) = PairGeometry::new(mu, nu)?;
    let n = geometry.space.state_count();
    let compressed: Vec<f64> = geometry
        .rows
        .iter()
        .flat_map(|&x| geometry.cols.iter().map(move |&y| cost.entries[x * n + y]))
        .collect();
    let sol = solver.solve(&compressed)?;
    finish_ot(mu, nu, &geometry, sol)
}

fn finish_ot(
    mu: &Measure,
    nu: &Measure,
    geometry: &PairGeometry,
    sol: TransportSolution,
) -> Result<OtSolution> {
    if sol.duality_residual > 1e-9 {
        return Err(Error::Solver(format!(
            "transport duality residual {} exceeds 1e-9",
            sol.duality_residual
        )));
    }
    let arcs = geometry.arcs_to_states(&sol.arcs);
    let plan = Coupling::from_arcs(mu, nu, &arcs)?;
    Ok(OtSolution {
        value: sol.value,
        plan,
        row_potentials: geometry
            .rows
            .iter()
            .zip(&sol.row_potentials)
            .map(|(&x, &u)| (x, u))
            .collect(),
        col_potentials: geometry
            .cols
            .iter()
            .zip(&sol.col_potentials)
            .map(|(&y, &v)| (y, v))
            .collect(),
        duality_residual: sol.duality_residual,
    })
}

/// `W^{(H)}_{1,Λ}(μ, ν)`: Hamming optimal transport; equals `Q_{1,Λ}`.
pub fn hamming_w1(mu: &Measure, nu: &Measure) -> Result<f64> {
    let (geometry, mut solver) = PairGeometry::new(mu, nu)?;
    let mut cost = Vec::new();
    geometry.fill_weighted_hamming_cost(&vec![1.0; geometry.num_sites()], &mut cost);
    let sol = solver.solve(&cost)?;
    if sol.duality_residual > 1e-9 {
        return Err(Error::Solver("Hamming OT duality residual above 1e-9".into()));
    }
    Ok(sol.value)
}

/// Kantorovich–Wasserstein distance of order `p` for the Hamming ground
/// metric: `(min ∫ d_H^p dΠ)^{1/p}`. Finite `p` only; upper-bounds `Q_p`.
pub fn wasserstein_p_hamming(mu: &Measure, nu: &Measure, p: Exponent) -> Result<f64> {
    let Exponent::Finite(_) = p else {
        return Err(Error::BadExponent("wasserstein_p requires finite p"));
    };
    let (geometry, mut solver) = PairGeometry::new(mu, nu)?;
    let mut cost = Vec::new();
    geometry.fill_hamming_power_cost(p.as_f64(), &mut cost);
    let sol = solver.solve(&cost)?;
    if sol.duality_residual > 1e-9 {
        return Err(Error::Solver("W_p OT duality residual above 1e-9".into()));
    }
    Ok(sol.value.max(0.0).powf(1.0 / p.as_f64()))
}

/// Certified value of the coupling functional `Q_{p,Λ}`: an upper bound from
/// an explicit coupling, a lower bound from an explicit `‖α‖_q ≤ 1` weight
/// vector, and their gap. On non-convergence the best bounds are returned
/// with `converged = false` rather than an asserted value.
#[derive(Debug, Clone)]
pub struct TransportCertificate {
    pub p: Exponent,
    pub value_upper: f64,
    pub value_lower: f64,
    pub gap: f64,
    /// dual site weights, volume order; `‖α‖_q ≤ 1`
    pub alpha: Vec<f64>,
    /// disagreement marginals of the certifying coupling
    pub m: Vec<f64>,
    /// materialized on small spaces only
    pub plan: Option<Coupling>,
    pub iterations: usize,
    pub converged: bool,
}

impl TransportCertificate {
    /// The certified value (upper bound; the gap bounds its distance to the
    /// true optimum).
    pub fn value(&self) -> f64 {
        self.value_upper
    }
}

impl Serialize for TransportCertificate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("TransportCertificate", 6)?;
        s.serialize_field("p", &self.p)?;
        s.serialize_field("value_upper", &self.value_upper)?;
        s.serialize_field("value_lower", &self.value_lower)?;
        s.serialize_field("gap", &self.gap)?;
        s.serialize_field("alpha", &self.alpha)?;
        s.serialize_field("m", &self.m)?;
        s.end()
    }
}

/// `Q_{p,Λ}(μ, ν)` with a certified two-sided bound.
pub fn q_p(mu: &Measure, nu: &Measure, p: Exponent) -> Result<TransportCertificate> {
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch);
    }
    let sites = mu.space().num_sites();
    if mu.probs() == nu.probs() {
        let plan = if mu.space().state_count() <= PLAN_MATERIALIZE_CAP {
            Some(Coupling::diagonal(mu)?)
        } else {
            None
        };
        return Ok(TransportCertificate {
            p,
            value_upper: 0.0,
            value_lower: 0.0,
            gap: 0.0,
            alpha: vec![0.0; sites],
            m: vec![0.0; sites],
            plan,
            iterations: 0,
            converged: true,
        });
    }
    let (geometry, mut solver) = PairGeometry::new(mu, nu)?;
    let saddle = solve_saddle(&geometry, &mut solver, p, SADDLE_TOL, SADDLE_MAX_ITER)?;
    let plan = if mu.space().state_count() <= PLAN_MATERIALIZE_CAP {
        Some(Coupling::from_arcs(
            mu,
            nu,
            &geometry.arcs_to_states(&saddle.arcs),
        )?)
    } else {
        None
    };
    Ok(TransportCertificate {
        p,
        value_upper: saddle.upper,
        value_lower: saddle.lower,
        gap: saddle.upper - saddle.lower,
        alpha: saddle.alpha,
        m: saddle.m,
        plan,
        iterations: saddle.iterations,
        converged: saddle.converged,
    })
}

/// The `p = ∞` functional as one explicit LP (`min t` s.t. `m_i(Π) ≤ t`
/// over the transportation polytope); used as an independent cross-check of
/// the certified route in [`q_p`].
pub fn q_infinity_lp_value(mu: &Measure, nu: &Measure) -> Result<f64> {
    use crate::solver::{LpProblem, RowKind};
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch);
    }
    let (geometry, _) = PairGeometry::new(mu, nu)?;
    let (nr, nc) = (geometry.rows.len(), geometry.cols.len());
    let sites = geometry.num_sites();
    // vars: plan entries (row-major over support) then t
    let mut lp = LpProblem::new(nr * nc + 1);
    let t = nr * nc;
    lp.set_objective(t, -1.0);
    for (i, &x) in geometry.rows.iter().enumerate() {
        lp.add_row(
            RowKind::Eq,
            (0..nc).map(|j| (i * nc + j, 1.0)).collect(),
            mu.prob(x),
        );
    }
    for (j, &y) in geometry.cols.iter().enumerate() {
        lp.add_row(
            RowKind::Eq,
            (0..nr).map(|i| (i * nc + j, 1.0)).collect(),
            nu.prob(y),
        );
    }
    for pos in 0..sites {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for i in 0..nr {
            for j in 0..nc {
                if geometry.masks[i * nc + j] & (1 << pos) != 0 {
                    coeffs.push((i * nc + j, 1.0));
                }
            }
        }
        coeffs.push((t, -1.0));
        lp.add_row(RowKind::Le, coeffs, 0.0);
    }
    let sol = lp.solve()?;
    Ok(-sol.value)
}

/// Marton's conditional squared-disagreement functional for a coupling,
/// conditioning on the `ν` (second) coordinate:
/// `Σ_i Σ_ξ (Π{σ_i ≠ σ'_i | σ' = ξ})² ν(ξ)`. Dominates `Σ_i m_i²`.
pub fn marton_bound(plan: &Coupling) -> f64 {
    let space = plan.space();
    let n = space.state_count();
    let sites = space.num_sites();
    let nu = plan.second_marginal();
    let mut total = 0.0;
    for y in 0..n {
        let mass = nu.prob(y);
        if mass == 0.0 {
            continue;
        }
        for pos in 0..sites {
            let mut disagree = 0.0;
            for x in 0..n {
                if space.digit(x, pos) != space.digit(y, pos) {
                    disagree += plan.prob(x, y);
                }
            }
            let conditional = disagree / mass;
            total += conditional * conditional * mass;
        }
    }
    total
}

/// Extend a coupling on `Λ` to `target ⊇ Λ` with independent coordinates on
/// `target ∖ Λ`, both drawn from the filler's marginal there. The pair
/// marginal on `Λ × Λ` is exactly the original coupling, so all `Λ`-site
/// disagreement marginals are preserved.
pub fn extend_coupling(plan: &Coupling, target: &Volume, filler: &Measure) -> Result<Coupling> {
    let base = plan.space().volume();
    if !base.is_subset_of(target) {
        return Err(Error::Domain("extension target must contain the base volume".into()));
    }
    if filler.space().volume() != target
        || filler.space().alphabet_size() != plan.space().alphabet_size()
    {
        return Err(Error::Domain("filler must live on the target volume".into()));
    }
    if base == target {
        return Ok(plan.clone());
    }
    let complement: Vec<crate::lattice::Site> = target
        .sites()
        .iter()
        .filter(|s| !base.contains(s))
        .cloned()
        .collect();
    let comp_volume = Volume::new(complement)?;
    let star = filler.marginal(&comp_volume)?;

    let target_space = ConfigSpace::new(target.clone(), plan.space().alphabet_size())?;
    let nt = target_space.state_count();
    if nt * nt > OT_ENTRY_CAP {
        return Err(Error::Capacity {
            states: (nt * nt) as u128,
            cap: OT_ENTRY_CAP as u64,
        });
    }
    let alphabet = target_space.alphabet_size();
    let base_positions: Vec<usize> = base
        .sites()
        .iter()
        .map(|s| target.index_of(s).expect("subset"))
        .collect();
    let comp_positions: Vec<usize> = comp_volume
        .sites()
        .iter()
        .map(|s| target.index_of(s).expect("subset"))
        .collect();
    let project = |state: usize, positions: &[usize]| -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &pos in positions {
            idx += target_space.digit(state, pos) * stride;
            stride *= alphabet;
        }
        idx
    };

    let mu_ext = extend_product(plan.first_marginal(), &star, &target_space, &base_positions, &comp_positions)?;
    let nu_ext = extend_product(plan.second_marginal(), &star, &target_space, &base_positions, &comp_positions)?;

    let mut joint = vec![0.0; nt * nt];
    for x in 0..nt {
        let xb = project(x, &base_positions);
        let xc = project(x, &comp_positions);
        let px = star.prob(xc);
        if px == 0.0 {
            continue;
        }
        for y in 0..nt {
            let base_mass = plan.prob(xb, project(y, &base_positions));
            if base_mass == 0.0 {
                continue;
            }
            joint[x * nt + y] = base_mass * px * star.prob(project(y, &comp_positions));
        }
    }
    Coupling::new(mu_ext, nu_ext, joint)
}

fn extend_product(
    base_measure: &Measure,
    star: &Measure,
    target_space: &ConfigSpace,
    base_positions: &[usize],
    comp_positions: &[usize],
) -> Result<Measure> {
    let alphabet = target_space.alphabet_size();
    let project = |state: usize, positions: &[usize]| -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &pos in positions {
            idx += target_space.digit(state, pos) * stride;
            stride *= alphabet;
        }
        idx
    };
    let probs = (0..target_space.state_count())
        .map(|x| base_measure.prob(project(x, base_positions)) * star.prob(project(x, comp_positions)))
        .collect();
    Measure::new(target_space.clone(), probs)
}
