//! Thermodynamic-limit experiments: rescaled distance sequences along
//! centered cubes, d̄-distance sandwiches, relative entropy densities, and
//! `p`-independence of the normalized limits.
//!
//! Exactness has a hard boundary: every point of a sequence is an exact
//! finite-volume solve, so sequences stop (with a flag) once the state
//! count leaves the solver's capacity. The limits themselves are never
//! asserted — the deliverables are bounds plus slope diagnostics.

use rand::Rng;

use crate::lattice::Volume;
use crate::measures::{relative_entropy, EntropyValue, Measure, ProcessSpec};
use crate::sampling::{derive_seed, rng_from_seed};
use crate::transport::q_p;
use crate::{Error, Exponent, Result};

/// One exact point of a rescaled distance sequence.
#[derive(Debug, Clone)]
pub struct LimitEntry {
    pub n: i64,
    pub volume_size: usize,
    /// certified `Q_{p,Λ_n}` (upper end of the sandwich)
    pub raw: f64,
    /// `raw / |Λ_n|^{1/p}`
    pub normalized: f64,
    /// certificate gap at this point
    pub gap: f64,
}

/// Rescaled distance sequence along cubes `Λ_n`, with diagnostics.
#[derive(Debug, Clone)]
pub struct LimitSequence {
    pub p: Exponent,
    pub entries: Vec<LimitEntry>,
    /// true when the capacity cap stopped the sequence before `n_max`
    pub truncated: bool,
    /// last normalized value — a bound, not an asserted limit
    pub limit_estimate: f64,
    /// difference of the final two normalized values
    pub slope_estimate: f64,
    /// Aitken Δ² extrapolation from the final three points when defined
    pub aitken_estimate: Option<f64>,
    /// whether the normalized sequence was nondecreasing over the window
    pub monotone_nondecreasing: bool,
}

fn require_translation_invariant(spec: &ProcessSpec) -> Result<()> {
    if !spec.is_translation_invariant() {
        return Err(Error::Domain(
            "thermodynamic sequences require translation-invariant specs".into(),
        ));
    }
    Ok(())
}

/// Exact `Q_p`/`D_p` values per centered cube, normalized by `|Λ_n|^{1/p}`.
pub fn limit_sequence(
    spec_a: &ProcessSpec,
    spec_b: &ProcessSpec,
    p: Exponent,
    n_max: i64,
    dimension: usize,
) -> Result<LimitSequence> {
    require_translation_invariant(spec_a)?;
    require_translation_invariant(spec_b)?;
    let mut entries = Vec::new();
    let mut truncated = false;
    for n in 0..=n_max {
        let volume = Volume::cube(dimension, n)?;
        let pair = (spec_a.realize(&volume), spec_b.realize(&volume));
        let (mu, nu) = match pair {
            (Ok(mu), Ok(nu)) => (mu, nu),
            (Err(Error::Capacity { .. }), _) | (_, Err(Error::Capacity { .. })) => {
                truncated = true;
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let cert = match q_p(&mu, &nu, p) {
            Ok(c) => c,
            Err(Error::Capacity { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let size = volume.len() as f64;
        let normalized = match p {
            Exponent::Infinity => cert.value_upper,
            _ => cert.value_upper / size.powf(1.0 / p.as_f64()),
        };
        entries.push(LimitEntry {
            n,
            volume_size: volume.len(),
            raw: cert.value_upper,
            normalized,
            gap: cert.gap,
        });
    }
    if entries.is_empty() {
        return Err(Error::Capacity { states: 0, cap: 0 });
    }
    let normalized: Vec<f64> = entries.iter().map(|e| e.normalized).collect();
    let limit_estimate = *normalized.last().unwrap();
    let slope_estimate = if normalized.len() >= 2 {
        normalized[normalized.len() - 1] - normalized[normalized.len() - 2]
    } else {
        0.0
    };
    let aitken_estimate = if normalized.len() >= 3 {
        let v0 = normalized[normalized.len() - 3];
        let v1 = normalized[normalized.len() - 2];
        let v2 = normalized[normalized.len() - 1];
        let denom = (v2 - v1) - (v1 - v0);
        if denom.abs() > 1e-14 {
            Some(v2 - (v2 - v1) * (v2 - v1) / denom)
        } else {
            None
        }
    } else {
        None
    };
    let monotone = normalized.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    Ok(LimitSequence {
        p,
        entries,
        truncated,
        limit_estimate,
        slope_estimate,
        aitken_estimate,
        monotone_nondecreasing: monotone,
    })
}

/// Spread of the normalized values across exponents, per volume and at the
/// sequence ends.
#[derive(Debug, Clone)]
pub struct PIndependenceReport {
    pub sequences: Vec<LimitSequence>,
    /// `(n, max_p - min_p)` over the common prefix
    pub per_n_spread: Vec<(i64, f64)>,
    /// spread of the final normalized values
    pub final_spread: f64,
}

pub fn p_independence_check(
    spec_a: &ProcessSpec,
    spec_b: &ProcessSpec,
    ps: &[Exponent],
    n_max: i64,
    dimension: usize,
) -> Result<PIndependenceReport> {
    if ps.is_empty() {
        return Err(Error::Domain("need at least one exponent".into()));
    }
    let sequences: Vec<LimitSequence> = ps
        .iter()
        .map(|&p| limit_sequence(spec_a, spec_b, p, n_max, dimension))
        .collect::<Result<_>>()?;
    let common = sequences.iter().map(|s| s.entries.len()).min().unwrap_or(0);
    let mut per_n_spread = Vec::new();
    for k in 0..common {
        let values: Vec<f64> = sequences.iter().map(|s| s.entries[k].normalized).collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        per_n_spread.push((sequences[0].entries[k].n, max - min));
    }
    let finals: Vec<f64> = sequences.iter().map(|s| s.limit_estimate).collect();
    let final_spread = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - finals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PIndependenceReport {
        sequences,
        per_n_spread,
        final_spread,
    })
}

/// Two-sided d̄ estimate: an exact normalized `D_1` lower bound and a Monte
/// Carlo upper bound from an explicit jointly translation-invariant
/// coupling.
#[derive(Debug, Clone)]
pub struct DbarSandwich {
    /// `D_{1,Λ_n}/|Λ_n|` at the largest solved cube (a valid lower bound by
    /// superadditivity)
    pub lower: f64,
    pub lower_n: i64,
    /// empirical per-site disagreement of the stationary maximal coupling;
    /// `None` when no coupling construction exists for the spec kind
    pub upper: Option<f64>,
    /// 95% batch-means half width
    pub half_width: Option<f64>,
    pub samples: usize,
    pub burn_in: usize,
    /// `lower ≤ upper + 3·half_width` whenever the upper bound exists
    pub consistent: bool,
}

/// Markov-equivalent kernel of a spec (i.i.d. laws become constant rows).
fn chain_equivalent(spec: &ProcessSpec) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    match spec {
        ProcessSpec::Iid { probs } => Some((vec![probs.clone(); probs.len()], probs.clone())),
        ProcessSpec::Markov {
            transition,
            stationary,
        } => Some((transition.clone(), stationary.clone())),
        ProcessSpec::Ising { beta, field, .. } => {
            if *beta == 0.0 {
                let z = 2.0 * field.cosh();
                let probs = vec![(-field).exp() / z, field.exp() / z];
                Some((vec![probs.clone(); 2], probs))
            } else {
                None
            }
        }
    }
}

/// Draw from the maximal coupling of two finite laws using one shared
/// uniform stream: with probability `1 - TV` both symbols come from the
/// overlap; otherwise each is drawn from its normalized residual.
fn maximal_coupling_draw(pa: &[f64], pb: &[f64], rng: &mut impl Rng) -> (usize, usize) {
    let tv: f64 = 0.5 * pa.iter().zip(pb).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let inverse_cdf = |weights: &[f64], total: f64, u: f64| -> usize {
        let mut acc = 0.0;
        let target = u * total;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target <= acc {
                return i;
            }
        }
        weights.len() - 1
    };
    let u: f64 = rng.gen();
    if tv <= 1e-15 || u >= tv {
        let overlap: Vec<f64> = pa.iter().zip(pb).map(|(a, b)| a.min(*b)).collect();
        let v: f64 = rng.gen();
        let s = inverse_cdf(&overlap, 1.0 - tv, v);
        (s, s)
    } else {
        let above: Vec<f64> = pa.iter().zip(pb).map(|(a, b)| (a - b).max(0.0)).collect();
        let below: Vec<f64> = pa.iter().zip(pb).map(|(a, b)| (b - a).max(0.0)).collect();
        let v: f64 = rng.gen();
        let w: f64 = rng.gen();
        (inverse_cdf(&above, tv, v), inverse_cdf(&below, tv, w))
    }
}

/// d̄ sandwich for a d=1 pair: exact lower bound from the largest cube,
/// Monte Carlo upper bound from the stationary maximal coupling driven by a
/// shared uniform stream (jointly translation invariant in the stationary
/// regime).
pub fn dbar_sandwich(
    spec_a: &ProcessSpec,
    spec_b: &ProcessSpec,
    n_max: i64,
    mc_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<DbarSandwich> {
    let lower_seq = limit_sequence(spec_a, spec_b, Exponent::ONE, n_max, 1)?;
    let last = lower_seq.entries.last().expect("non-empty sequence");
    let lower = last.normalized;
    let lower_n = last.n;

    let (upper, half_width) = match (chain_equivalent(spec_a), chain_equivalent(spec_b)) {
        (Some((pa, pia)), Some((pb, pib))) => {
            let mut rng = rng_from_seed(derive_seed(seed, 0xD8A2));
            let (mut x, mut y) = maximal_coupling_draw(&pia, &pib, &mut rng);
            for _ in 0..burn_in {
                let (nx, ny) = maximal_coupling_draw(&pa[x], &pb[y], &mut rng);
                x = nx;
                y = ny;
            }
            let batches = 1000.min(mc_samples.max(1));
            let batch_len = (mc_samples / batches).max(1);
            let mut batch_means = Vec::with_capacity(batches);
            for _ in 0..batches {
                let mut disagreements = 0usize;
                for _ in 0..batch_len {
                    let (nx, ny) = maximal_coupling_draw(&pa[x], &pb[y], &mut rng);
                    x = nx;
                    y = ny;
                    if x != y {
                        disagreements += 1;
                    }
                }
                batch_means.push(disagreements as f64 / batch_len as f64);
            }
            let mean: f64 = batch_means.iter().sum::<f64>() / batches as f64;
            let var: f64 = batch_means
                .iter()
                .map(|m| (m - mean) * (m - mean))
                .sum::<f64>()
                / (batches as f64 - 1.0).max(1.0);
            let hw = 1.96 * (var / batches as f64).sqrt();
            (Some(mean), Some(hw))
        }
        _ => (None, None),
    };

    let consistent = match (upper, half_width) {
        (Some(u), Some(h)) => lower <= u + 3.0 * h + 1e-12,
        _ => true,
    };
    Ok(DbarSandwich {
        lower,
        lower_n,
        upper,
        half_width,
        samples: mc_samples,
        burn_in,
        consistent,
    })
}

/// Relative entropy density sequence `s_{Λ_n}(ν_A | ν_B)/|Λ_n|` together
/// with the closed-form rate oracle where one exists.
#[derive(Debug, Clone)]
pub struct EntropyDensity {
    pub entries: Vec<(i64, usize, EntropyValue)>,
    pub truncated: bool,
    /// closed-form limit: single-site KL for i.i.d. laws, conditional KL
    /// rate for Markov chains
    pub rate_oracle: Option<EntropyValue>,
}

pub fn entropy_density(
    spec_a: &ProcessSpec,
    spec_b: &ProcessSpec,
    n_max: i64,
    dimension: usize,
) -> Result<EntropyDensity> {
    require_translation_invariant(spec_a)?;
    require_translation_invariant(spec_b)?;
    let mut entries = Vec::new();
    let mut truncated = false;
    for n in 0..=n_max {
        let volume = Volume::cube(dimension, n)?;
        let pair = (spec_a.realize(&volume), spec_b.realize(&volume));
        let (nu, mu) = match pair {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::Capacity { .. }), _) | (_, Err(Error::Capacity { .. })) => {
                truncated = true;
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let size = volume.len();
        let value = match relative_entropy(&nu, &mu)? {
            EntropyValue::Infinite => EntropyValue::Infinite,
            EntropyValue::Finite(s) => EntropyValue::Finite(s / size as f64),
        };
        entries.push((n, size, value));
    }
    let rate_oracle = entropy_rate_oracle(spec_a, spec_b);
    Ok(EntropyDensity {
        entries,
        truncated,
        rate_oracle,
    })
}

/// Closed-form relative entropy rate `s(A|B)` for chain-equivalent specs:
/// `Σ_x π_A(x) Σ_y P_A(x,y) log(P_A(x,y)/P_B(x,y))`.
pub fn entropy_rate_oracle(spec_a: &ProcessSpec, spec_b: &ProcessSpec) -> Option<EntropyValue> {
    let (pa, pia) = chain_equivalent(spec_a)?;
    let (pb, _) = chain_equivalent(spec_b)?;
    if pa.len() != pb.len() {
        return None;
    }
    let mut rate = 0.0;
    for (x, row_a) in pa.iter().enumerate() {
        for (y, &a) in row_a.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            if pb[x][y] == 0.0 {
                return Some(EntropyValue::Infinite);
            }
            rate += pia[x] * a * (a / pb[x][y]).ln();
        }
    }
    Some(EntropyValue::Finite(rate.max(0.0)))
}

/// One volume of the finite-`n` transport-entropy chain
/// `Q_1/|Λ| ≤ Q_2/√|Λ| ≤ √(2C·s_Λ/|Λ|)`.
#[derive(Debug, Clone)]
pub struct AverseRow {
    pub n: i64,
    pub volume_size: usize,
    pub q1_normalized: f64,
    pub q2_normalized: f64,
    pub entropy_density: EntropyValue,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct AverseReport {
    pub c: f64,
    pub rows: Vec<AverseRow>,
    pub all_pass: bool,
}

/// Finite-volume ancestor of the d̄ transport-entropy inequality: when
/// `spec_a` satisfies `GCB(C, ℓ²)`, every cube obeys
/// `Q_{1,Λ}/|Λ| ≤ Q_{2,Λ}/√|Λ| ≤ √(2C·s_Λ(ν|μ)/|Λ|)` with `μ` from
/// `spec_a` and `ν` from `spec_b`; infinite entropy passes vacuously.
pub fn averse_check(
    spec_a: &ProcessSpec,
    spec_b: &ProcessSpec,
    c: f64,
    n_max: i64,
    dimension: usize,
) -> Result<AverseReport> {
    if c <= 0.0 {
        return Err(Error::Domain("constant must be positive".into()));
    }
    require_translation_invariant(spec_a)?;
    require_translation_invariant(spec_b)?;
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let volume = Volume::cube(dimension, n)?;
        let (mu, nu) = match (spec_a.realize(&volume), spec_b.realize(&volume)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::Capacity { .. }), _) | (_, Err(Error::Capacity { .. })) => break,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let size = volume.len() as f64;
        let q1 = match q_p(&mu, &nu, Exponent::ONE) {
            Ok(cert) => cert.value_upper / size,
            Err(Error::Capacity { .. }) => break,
            Err(e) => return Err(e),
        };
        let q2 = q_p(&mu, &nu, Exponent::TWO)?.value_upper / size.sqrt();
        let s = relative_entropy(&nu, &mu)?;
        let (bound, pass) = match s {
            EntropyValue::Infinite => (f64::INFINITY, true),
            EntropyValue::Finite(sv) => {
                let bound = (2.0 * c * sv / size).sqrt();
                (
                    bound,
                    q1 <= bound + 1e-8 && q2 <= bound + 1e-8 && q1 <= q2 + 1e-8,
                )
            }
        };
        rows.push(AverseRow {
            n,
            volume_size: volume.len(),
            q1_normalized: q1,
            q2_normalized: q2,
            entropy_density: match s {
                EntropyValue::Infinite => EntropyValue::Infinite,
                EntropyValue::Finite(sv) => EntropyValue::Finite(sv / size),
            },
            bound,
            pass,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(AverseReport { c, rows, all_pass })
}

/// Disjoint-split superadditivity probe on one volume: returns
/// `(Q_p^p on the whole volume, Q_p^p(left half) + Q_p^p(right half))`.
pub fn superadditivity_split(mu: &Measure, nu: &Measure, p: Exponent) -> Result<(f64, f64)> {
    let volume = mu.space().volume().clone();
    if volume.len() < 2 {
        return Err(Error::Domain("need at least two sites to split".into()));
    }
    let half = volume.len() / 2;
    let left = Volume::new(volume.sites()[..half].to_vec())?;
    let right = Volume::new(volume.sites()[half..].to_vec())?;
    let pf = match p {
        Exponent::Infinity => {
            return Err(Error::BadExponent("superadditivity probe needs finite p"))
        }
        _ => p.as_f64(),
    };
    let whole = q_p(mu, nu, p)?.value_upper.powf(pf);
    let l = q_p(&mu.marginal(&left)?, &nu.marginal(&left)?, p)?
        .value_upper
        .powf(pf);
    let r = q_p(&mu.marginal(&right)?, &nu.marginal(&right)?, p)?
        .value_upper
        .powf(pf);
    Ok((whole, l + r))
}
