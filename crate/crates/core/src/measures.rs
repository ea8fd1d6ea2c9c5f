//! Probability measures on `S^Λ`: dense tables, the i.i.d./Markov/Ising
//! instance families, marginals, relative entropy and its variational
//! representations.

use serde::{Deserialize, Serialize};

use crate::lattice::{ConfigSpace, LocalFunction, Volume};
use crate::{Error, Result};

/// Tolerance on `Σ probs = 1` at construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probabilities below this are treated as exact zeros, so that absolute
/// continuity tests are not polluted by log underflow.
pub const PROB_FLOOR: f64 = 1e-300;

/// A probability measure on a finite configuration space, stored as a dense
/// table in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    space: ConfigSpace,
    probs: Vec<f64>,
}

impl Measure {
    pub fn new(space: ConfigSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.state_count() {
            return Err(Error::Domain(format!(
                "probability table length {} != state count {}",
                probs.len(),
                space.state_count()
            )));
        }
        let mut probs = probs;
        let mut sum = 0.0;
        for (idx, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::NegativeProbability { idx, value: *p });
            }
            if *p < PROB_FLOOR {
                *p = 0.0;
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Measure { space, probs })
    }

    /// Normalizes a nonnegative weight table with positive total mass.
    pub fn from_weights(space: ConfigSpace, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::Domain("weights must have positive finite mass".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Measure::new(space, probs)
    }

    pub fn uniform(space: ConfigSpace) -> Result<Self> {
        let n = space.state_count();
        Measure::new(space, vec![1.0 / n as f64; n])
    }

    pub fn dirac(space: ConfigSpace, index: usize) -> Result<Self> {
        let n = space.state_count();
        if index >= n {
            return Err(Error::Domain("dirac atom out of range".into()));
        }
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Measure::new(space, probs)
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn expectation(&self, f: &LocalFunction) -> Result<f64> {
        if f.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .probs
            .iter()
            .zip(f.values())
            .map(|(p, v)| p * v)
            .sum())
    }

    pub fn total_variation(&self, other: &Measure) -> Result<f64> {
        if other.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Pushforward under restriction of configurations to `sub ⊆ Λ`.
    pub fn marginal(&self, sub: &Volume) -> Result<Measure> {
        let volume = self.space.volume();
        if !sub.is_subset_of(volume) {
            return Err(Error::Domain("marginal volume is not a subset".into()));
        }
        if sub == volume {
            return Ok(self.clone());
        }
        let sub_space = ConfigSpace::new(sub.clone(), self.space.alphabet_size())?;
        let positions: Vec<usize> = sub
            .sites()
            .iter()
            .map(|s| volume.index_of(s).expect("subset checked"))
            .collect();
        let mut probs = vec![0.0; sub_space.state_count()];
        for (idx, p) in self.probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let mut sub_idx = 0usize;
            let mut stride = 1usize;
            for &pos in &positions {
                sub_idx += self.space.digit(idx, pos) * stride;
                stride *= self.space.alphabet_size();
            }
            probs[sub_idx] += p;
        }
        Measure::new(sub_space, probs)
    }

    /// Exponential tilt `ν ∝ e^f μ`.
    pub fn tilt(&self, f: &LocalFunction) -> Result<Measure> {
        if f.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let shift = f.max_value();
        let weights: Vec<f64> = self
            .probs
            .iter()
            .zip(f.values())
            .map(|(p, v)| p * (v - shift).exp())
            .collect();
        Measure::from_weights(self.space.clone(), weights)
    }
}

// JSON layout: {"alphabet": k, "volume": [[coords]...], "probs": [...]}
#[derive(Serialize, Deserialize)]
struct MeasureJson {
    alphabet: usize,
    volume: Vec<Vec<i64>>,
    probs: Vec<f64>,
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureJson {
            alphabet: self.space.alphabet_size(),
            volume: self
                .space
                .volume()
                .sites()
                .iter()
                .map(|s| s.0.clone())
                .collect(),
            probs: self.probs.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MeasureJson::deserialize(deserializer)?;
        let volume = Volume::new(
            raw.volume
                .into_iter()
                .map(crate::lattice::Site)
                .collect(),
        )
        .map_err(D::Error::custom)?;
        let space = ConfigSpace::new(volume, raw.alphabet).map_err(D::Error::custom)?;
        Measure::new(space, raw.probs).map_err(D::Error::custom)
    }
}

/// Ising boundary condition for the finite-volume Gibbs weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IsingBoundary {
    #[default]
    Free,
    Plus,
    /// Wrap-around bond; d = 1 only.
    Periodic,
}

/// Translation-invariant instance families used throughout the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// Product measure with one single-site probability vector.
    Iid { probs: Vec<f64> },
    /// Stationary Markov chain in d = 1: stochastic transition matrix and
    /// its (strictly positive) stationary vector.
    Markov {
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
    /// Finite-volume Ising weights `exp(β Σ σ_i σ_j + h Σ σ_i + boundary)`
    /// on spins `{-1, +1}` (symbol 0 ↦ -1, symbol 1 ↦ +1).
    Ising {
        beta: f64,
        field: f64,
        #[serde(default)]
        boundary: IsingBoundary,
    },
}

fn check_prob_vector(probs: &[f64], what: &str) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::Domain(format!("{what}: alphabet must have >= 2 symbols")));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Domain(format!("{what}: entries must be nonnegative")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("{what}: row sums to {sum}, expected 1")));
    }
    Ok(())
}

impl ProcessSpec {
    pub fn iid(probs: Vec<f64>) -> Result<Self> {
        check_prob_vector(&probs, "iid law")?;
        Ok(ProcessSpec::Iid { probs })
    }

    /// Bernoulli(p) on symbols `{0, 1}`; `p` is the probability of symbol 1.
    pub fn bernoulli(p: f64) -> Result<Self> {
        ProcessSpec::iid(vec![1.0 - p, p])
    }

    pub fn markov(transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let k = stationary.len();
        if transition.len() != k || transition.iter().any(|row| row.len() != k) {
            return Err(Error::Domain("markov: transition matrix must be square".into()));
        }
        for row in &transition {
            check_prob_vector(row, "markov transition row")?;
        }
        check_prob_vector(&stationary, "markov stationary vector")?;
        if stationary.iter().any(|p| *p <= 0.0) {
            return Err(Error::Domain("markov: stationary vector must be strictly positive".into()));
        }
        for (j, &pi_j) in stationary.iter().enumerate() {
            let balance: f64 = stationary
                .iter()
                .zip(&transition)
                .map(|(pi_i, row)| pi_i * row[j])
                .sum();
            if (balance - pi_j).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "markov: vector is not stationary (defect {} at state {j})",
                    balance - pi_j
                )));
            }
        }
        Ok(ProcessSpec::Markov {
            transition,
            stationary,
        })
    }

    /// Two-state chain that flips with probability `flip`.
    pub fn two_state_flip(flip: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip) {
            return Err(Error::Domain("flip probability in [0, 1]".into()));
        }
        ProcessSpec::markov(
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
            vec![0.5, 0.5],
        )
    }

    pub fn ising(beta: f64, field: f64, boundary: IsingBoundary) -> Result<Self> {
        if !beta.is_finite() || !field.is_finite() {
            return Err(Error::Domain("ising: beta and field must be finite".into()));
        }
        Ok(ProcessSpec::Ising {
            beta,
            field,
            boundary,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            ProcessSpec::Iid { probs } => probs.len(),
            ProcessSpec::Markov { stationary, .. } => stationary.len(),
            ProcessSpec::Ising { .. } => 2,
        }
    }

    /// Whether finite-volume realizations are marginals of one
    /// translation-invariant infinite-volume measure. Ising qualifies only
    /// at infinite temperature, where the weights factor into a product.
    pub fn is_translation_invariant(&self) -> bool {
        match self {
            ProcessSpec::Iid { .. } | ProcessSpec::Markov { .. } => true,
            ProcessSpec::Ising { beta, .. } => *beta == 0.0,
        }
    }

    /// Single-site marginal law (for Ising: the β = 0 product law).
    pub fn site_law(&self) -> Vec<f64> {
        match self {
            ProcessSpec::Iid { probs } => probs.clone(),
            ProcessSpec::Markov { stationary, .. } => stationary.clone(),
            ProcessSpec::Ising { field, .. } => {
                let z = 2.0 * field.cosh();
                vec![(-field).exp() / z, field.exp() / z]
            }
        }
    }

    /// Exact finite-volume law.
    ///
    /// - `iid`: product over sites (any volume, any dimension);
    /// - `markov`: path law on a contiguous 1-d interval;
    /// - `ising`: normalized Boltzmann weights on any volume, with
    ///   nearest-neighbor bonds inside the volume and the selected boundary
    ///   term.
    pub fn realize(&self, volume: &Volume) -> Result<Measure> {
        let space = ConfigSpace::new(volume.clone(), self.alphabet_size())?;
        match self {
            ProcessSpec::Iid { probs } => {
                let n = space.state_count();
                let mut table = vec![1.0; n];
                for (idx, slot) in table.iter_mut().enumerate() {
                    for pos in 0..space.num_sites() {
                        *slot *= probs[space.digit(idx, pos)];
                    }
                }
                Measure::new(space, table)
            }
            ProcessSpec::Markov {
                transition,
                stationary,
            } => {
                if !volume.is_contiguous_interval() {
                    return Err(Error::Domain(
                        "markov realization requires a contiguous d=1 interval".into(),
                    ));
                }
                let n = space.state_count();
                let sites = space.num_sites();
                let mut table = vec![0.0; n];
                for (idx, slot) in table.iter_mut().enumerate() {
                    let mut p = stationary[space.digit(idx, 0)];
                    for pos in 1..sites {
                        p *= transition[space.digit(idx, pos - 1)][space.digit(idx, pos)];
                    }
                    *slot = p;
                }
                Measure::new(space, table)
            }
            ProcessSpec::Ising {
                beta,
                field,
                boundary,
            } => {
                if *boundary == IsingBoundary::Periodic && volume.dimension() != 1 {
                    return Err(Error::Domain("periodic ising boundary requires d = 1".into()));
                }
                let sites = volume.sites();
                // nearest-neighbor bonds inside the volume
                let mut bonds: Vec<(usize, usize)> = Vec::new();
                for (a, sa) in sites.iter().enumerate() {
                    for (b, sb) in sites.iter().enumerate().skip(a + 1) {
                        let dist: i64 = sa
                            .0
                            .iter()
                            .zip(&sb.0)
                            .map(|(x, y)| (x - y).abs())
                            .sum();
                        if dist == 1 {
                            bonds.push((a, b));
                        }
                    }
                }
                if *boundary == IsingBoundary::Periodic && sites.len() > 2 {
                    bonds.push((0, sites.len() - 1));
                }
                // plus boundary: each missing neighbor of a site contributes
                // a field-like term β σ_i
                let mut outside_neighbors = vec![0usize; sites.len()];
                if *boundary == IsingBoundary::Plus {
                    for (a, sa) in sites.iter().enumerate() {
                        for axis in 0..volume.dimension() {
                            for step in [-1_i64, 1] {
                                let mut coords = sa.0.clone();
                                coords[axis] += step;
                                if !volume.contains(&crate::lattice::Site(coords)) {
                                    outside_neighbors[a] += 1;
                                }
                            }
                        }
                    }
                }
                let n = space.state_count();
                let mut energy = vec![0.0; n];
                for (idx, slot) in energy.iter_mut().enumerate() {
                    let spin =
                        |pos: usize| -> f64 { 2.0 * space.digit(idx, pos) as f64 - 1.0 };
                    let mut h = 0.0;
                    for &(a, b) in &bonds {
                        h += beta * spin(a) * spin(b);
                    }
                    for (a, &missing) in outside_neighbors.iter().enumerate() {
                        h += beta * spin(a) * missing as f64;
                    }
                    for pos in 0..space.num_sites() {
                        h += field * spin(pos);
                    }
                    *slot = h;
                }
                let shift = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights = energy.iter().map(|h| (h - shift).exp()).collect();
                Measure::from_weights(space, weights)
            }
        }
    }
}

/// Relative entropy value: finite, or the `+∞` flag when absolute
/// continuity fails. Kept explicit so float infinities never leak into
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EntropyValue {
    Finite(f64),
    Infinite,
}

impl EntropyValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, EntropyValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            EntropyValue::Finite(v) => Some(*v),
            EntropyValue::Infinite => None,
        }
    }

    /// `f64` with `+∞` for the flag; for display and comparisons only.
    pub fn as_f64(&self) -> f64 {
        match self {
            EntropyValue::Finite(v) => *v,
            EntropyValue::Infinite => f64::INFINITY,
        }
    }
}

/// Relative entropy `s_Λ(ν|μ) = Σ ν log(ν/μ)` in nats, `+∞` when `ν ≪ μ`
/// fails, with `0·log(0/·) = 0`.
pub fn relative_entropy(nu: &Measure, mu: &Measure) -> Result<EntropyValue> {
    if nu.space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let mut sum = 0.0;
    for (n, m) in nu.probs.iter().zip(&mu.probs) {
        if *n == 0.0 {
            continue;
        }
        if *m == 0.0 {
            return Ok(EntropyValue::Infinite);
        }
        sum += n * (n / m).ln();
    }
    // clamp tiny negative rounding; the functional is nonnegative
    Ok(EntropyValue::Finite(sum.max(0.0)))
}

/// `log ∫ e^f dμ`, computed with a max shift for overflow safety.
pub fn log_integral_exp(mu: &Measure, f: &LocalFunction) -> Result<f64> {
    if f.space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let shift = f
        .values()
        .iter()
        .zip(mu.probs())
        .filter(|(_, p)| **p > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::Domain("measure has empty support".into()));
    }
    let sum: f64 = mu
        .probs()
        .iter()
        .zip(f.values())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, v)| p * (v - shift).exp())
        .sum();
    Ok(sum.ln() + shift)
}

/// Centered log moment generating function `log ∫ e^{f - μ(f)} dμ`.
/// Zero for constant `f` and nonnegative in general.
pub fn log_mgf(mu: &Measure, f: &LocalFunction) -> Result<f64> {
    Ok(log_integral_exp(mu, f)? - mu.expectation(f)?)
}

/// Slack of the entropy variational representation at `f`:
/// `s_Λ(ν|μ) - (ν(f) - log ∫ e^f dμ) ≥ 0`, exactly zero at the maximizer
/// `f = log(dν/dμ)`. `Infinite` when `ν ≪ μ` fails.
pub fn entropy_variational_gap(
    nu: &Measure,
    mu: &Measure,
    f: &LocalFunction,
) -> Result<EntropyValue> {
    let s = relative_entropy(nu, mu)?;
    match s {
        EntropyValue::Infinite => Ok(EntropyValue::Infinite),
        EntropyValue::Finite(s) => {
            let attained = nu.expectation(f)? - log_integral_exp(mu, f)?;
            Ok(EntropyValue::Finite(s - attained))
        }
    }
}

/// Slack of the Legendre dual at `ν`:
/// `log ∫ e^f dμ - (ν(f) - s_Λ(ν|μ)) ≥ 0`, zero at the Gibbs tilt
/// `ν* ∝ e^f μ`. `Infinite` when the entropy is infinite.
pub fn legendre_gap(mu: &Measure, f: &LocalFunction, nu: &Measure) -> Result<EntropyValue> {
    let s = relative_entropy(nu, mu)?;
    match s {
        EntropyValue::Infinite => Ok(EntropyValue::Infinite),
        EntropyValue::Finite(s) => {
            let value = log_integral_exp(mu, f)? - (nu.expectation(f)? - s);
            Ok(EntropyValue::Finite(value))
        }
    }
}

/// `log(dν/dμ)` as a table on the shared space; requires `μ` strictly
/// positive wherever `ν` is, and patches `-∞` off the support of `ν` with
/// the minimum over the support (harmless for variational identities).
pub fn log_density(nu: &Measure, mu: &Measure) -> Result<LocalFunction> {
    if nu.space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let mut logs = Vec::with_capacity(nu.probs.len());
    let mut min_log = f64::INFINITY;
    for (n, m) in nu.probs.iter().zip(&mu.probs) {
        if *n == 0.0 {
            logs.push(f64::NAN);
        } else if *m == 0.0 {
            return Err(Error::Domain("log density undefined: ν not << μ".into()));
        } else {
            let l = (n / m).ln();
            min_log = min_log.min(l);
            logs.push(l);
        }
    }
    let fill = if min_log.is_finite() { min_log } else { 0.0 };
    let values = logs
        .into_iter()
        .map(|l| if l.is_nan() { fill } else { l })
        .collect();
    LocalFunction::new(nu.space().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::site1;

    fn ber(p: f64, sites: i64) -> Measure {
        ProcessSpec::bernoulli(p)
            .unwrap()
            .realize(&Volume::interval(0, sites - 1).unwrap())
            .unwrap()
    }

    #[test]
    fn iid_fair_product_is_uniform() {
        let m = ber(0.5, 2);
        assert_eq!(m.probs(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn frozen_chain_concentrates_on_constant_words() {
        let spec = ProcessSpec::markov(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let m = spec.realize(&Volume::interval(0, 2).unwrap()).unwrap();
        let space = m.space().clone();
        assert_eq!(m.prob(space.rank(&[0, 0, 0]).unwrap()), 0.5);
        assert_eq!(m.prob(space.rank(&[1, 1, 1]).unwrap()), 0.5);
        assert_eq!(m.probs().iter().filter(|p| **p > 0.0).count(), 2);
    }

    #[test]
    fn markov_rejects_non_stationary_vector() {
        let err = ProcessSpec::markov(
            vec![vec![0.9, 0.1], vec![0.4, 0.6]],
            vec![0.5, 0.5],
        );
        assert!(err.is_err());
        // true stationary vector of that chain is (0.8, 0.2)
        assert!(ProcessSpec::markov(
            vec![vec![0.9, 0.1], vec![0.4, 0.6]],
            vec![0.8, 0.2],
        )
        .is_ok());
    }

    #[test]
    fn infinite_temperature_ising_is_uniform() {
        for boundary in [IsingBoundary::Free, IsingBoundary::Plus] {
            let spec = ProcessSpec::ising(0.0, 0.0, boundary).unwrap();
            let m = spec.realize(&Volume::cube(2, 1).unwrap()).unwrap();
            let n = m.probs().len() as f64;
            for p in m.probs() {
                assert!((p - 1.0 / n).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ising_plus_boundary_breaks_symmetry_upward() {
        let spec = ProcessSpec::ising(0.4, 0.0, IsingBoundary::Plus).unwrap();
        let m = spec.realize(&Volume::interval(0, 2).unwrap()).unwrap();
        let space = m.space().clone();
        let all_up = m.prob(space.rank(&[1, 1, 1]).unwrap());
        let all_down = m.prob(space.rank(&[0, 0, 0]).unwrap());
        assert!(all_up > all_down);
    }

    #[test]
    fn marginal_of_product_is_sub_product() {
        let spec = ProcessSpec::iid(vec![0.7, 0.3]).unwrap();
        let m = spec.realize(&Volume::interval(0, 1).unwrap()).unwrap();
        let sub = Volume::singleton(site1(0)).unwrap();
        let marg = m.marginal(&sub).unwrap();
        assert!((marg.prob(0) - 0.7).abs() < 1e-15);
        assert!((marg.prob(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn marginal_on_full_volume_is_identity() {
        let m = ber(0.3, 2);
        let marg = m.marginal(m.space().volume()).unwrap();
        assert_eq!(marg.probs(), m.probs());
    }

    #[test]
    fn marginal_consistency_chain() {
        let spec = ProcessSpec::ising(0.3, 0.1, IsingBoundary::Free).unwrap();
        let m = spec.realize(&Volume::interval(0, 2).unwrap()).unwrap();
        let a = Volume::interval(0, 1).unwrap();
        let b = Volume::singleton(site1(1)).unwrap();
        let via_a = m.marginal(&a).unwrap().marginal(&b).unwrap();
        let direct = m.marginal(&b).unwrap();
        for (x, y) in via_a.probs().iter().zip(direct.probs()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_entropy_examples() {
        let m = ber(0.5, 1);
        assert_eq!(relative_entropy(&m, &m).unwrap(), EntropyValue::Finite(0.0));

        let nu = ber(0.5, 1);
        let mu = ber(0.25, 1);
        let expect = 0.5 * (2.0_f64).ln() + 0.5 * (2.0_f64 / 3.0).ln();
        let got = relative_entropy(&nu, &mu).unwrap().finite().unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.14384).abs() < 5e-6);

        let nu = ber(1.0, 1);
        let mu = ber(0.0, 1);
        assert_eq!(relative_entropy(&nu, &mu).unwrap(), EntropyValue::Infinite);
    }

    #[test]
    fn relative_entropy_nonnegative_and_zero_iff_equal() {
        let spec = ProcessSpec::iid(vec![0.2, 0.5, 0.3]).unwrap();
        let mu = spec.realize(&Volume::interval(0, 1).unwrap()).unwrap();
        let nu = ProcessSpec::iid(vec![0.25, 0.45, 0.3])
            .unwrap()
            .realize(&Volume::interval(0, 1).unwrap())
            .unwrap();
        let s = relative_entropy(&nu, &mu).unwrap().finite().unwrap();
        assert!(s > 0.0);
        let zero = relative_entropy(&mu, &mu).unwrap().finite().unwrap();
        assert!(zero.abs() < 1e-10);
    }

    #[test]
    fn log_mgf_examples() {
        let mu = ber(0.5, 1);
        let constant = LocalFunction::constant(mu.space().clone(), 3.5).unwrap();
        assert!(log_mgf(&mu, &constant).unwrap().abs() < 1e-14);

        // f(σ) = a σ with σ = ±1: log cosh(a)
        for a in [0.5, 1.0, 2.0] {
            let f = LocalFunction::from_fn(mu.space().clone(), |c| {
                a * (2.0 * c[0] as f64 - 1.0)
            })
            .unwrap();
            assert!((log_mgf(&mu, &f).unwrap() - a.cosh().ln()).abs() < 1e-12);
        }

        // independence additivity on two fair coins
        let mu2 = ber(0.5, 2);
        let f = LocalFunction::from_fn(mu2.space().clone(), |c| {
            (2.0 * c[0] as f64 - 1.0) + (2.0 * c[1] as f64 - 1.0)
        })
        .unwrap();
        assert!((log_mgf(&mu2, &f).unwrap() - 2.0 * 1.0_f64.cosh().ln()).abs() < 1e-12);
        assert!((log_mgf(&mu2, &f).unwrap() - 2.0 * 0.43378).abs() < 2e-5);
    }

    #[test]
    fn variational_gap_zero_at_log_density() {
        let mu = ber(0.3, 2);
        let nu = ber(0.6, 2);
        let f = log_density(&nu, &mu).unwrap();
        let gap = entropy_variational_gap(&nu, &mu, &f).unwrap().finite().unwrap();
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn variational_gap_for_constant_f_is_entropy() {
        let mu = ber(0.3, 1);
        let nu = ber(0.7, 1);
        let f = LocalFunction::constant(mu.space().clone(), -2.0).unwrap();
        let s = relative_entropy(&nu, &mu).unwrap().finite().unwrap();
        let gap = entropy_variational_gap(&nu, &mu, &f).unwrap().finite().unwrap();
        assert!((gap - s).abs() < 1e-12);
    }

    #[test]
    fn variational_gap_at_nu_equals_mu_is_jensen_slack() {
        let mu = ber(0.4, 1);
        let f = LocalFunction::from_fn(mu.space().clone(), |c| c[0] as f64 * 1.7).unwrap();
        let gap = entropy_variational_gap(&mu, &mu, &f).unwrap().finite().unwrap();
        let jensen = log_integral_exp(&mu, &f).unwrap() - mu.expectation(&f).unwrap();
        assert!((gap - jensen).abs() < 1e-13);
        assert!(gap >= -1e-12);
    }

    #[test]
    fn legendre_gap_zero_at_tilt() {
        let mu = ber(0.35, 2);
        let f = LocalFunction::from_fn(mu.space().clone(), |c| {
            0.8 * c[0] as f64 - 1.2 * c[1] as f64
        })
        .unwrap();
        let tilt = mu.tilt(&f).unwrap();
        let gap = legendre_gap(&mu, &f, &tilt).unwrap().finite().unwrap();
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn legendre_gap_at_zero_function_is_entropy() {
        let mu = ber(0.35, 1);
        let nu = ber(0.8, 1);
        let f = LocalFunction::constant(mu.space().clone(), 0.0).unwrap();
        let s = relative_entropy(&nu, &mu).unwrap().finite().unwrap();
        let gap = legendre_gap(&mu, &f, &nu).unwrap().finite().unwrap();
        assert!((gap - s).abs() < 1e-12);
    }

    #[test]
    fn legendre_gap_infinite_entropy_flag() {
        let mu = ber(0.0, 1);
        let nu = ber(1.0, 1);
        let f = LocalFunction::constant(mu.space().clone(), 0.0).unwrap();
        assert_eq!(legendre_gap(&mu, &f, &nu).unwrap(), EntropyValue::Infinite);
    }

    #[test]
    fn measure_json_round_trip() {
        let spec = ProcessSpec::iid(vec![0.2, 0.8]).unwrap();
        let m = spec.realize(&Volume::cube(2, 0).unwrap()).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"alphabet\":2"));
        let back: Measure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
