//! Finite configuration spaces `S^Λ` for `Λ ⋐ ℤ^d`, local functions,
//! oscillations and translation machinery.
//!
//! Everything is indexed through one deterministic scheme: sites of a volume
//! are kept in lexicographic order and a configuration is ranked in
//! little-endian mixed radix over that order. Single-site modifications are
//! then stride jumps, which is what the exact oscillation enumeration relies
//! on.

use serde::{Deserialize, Serialize};

use crate::{Error, Exponent, Result};

/// Hard cap on `|S|^|Λ|` for exact-mode tables. Enumeration over all
/// configurations is the verification backbone; instances beyond this are
/// refused rather than approximated.
pub const EXACT_STATE_CAP: u64 = 1 << 20;

/// A lattice site `i ∈ ℤ^d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn translated(&self, offset: &Site) -> Site {
        Site(self.0.iter().zip(&offset.0).map(|(a, b)| a + b).collect())
    }
}

/// Convenience for 1-d sites.
pub fn site1(x: i64) -> Site {
    Site(vec![x])
}

/// A non-empty finite `Λ ⋐ ℤ^d`, stored sorted lexicographically and
/// duplicate-free so that all table indexing is reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Volume {
    sites: Vec<Site>,
    dimension: usize,
}

impl Volume {
    pub fn new(mut sites: Vec<Site>) -> Result<Self> {
        let Some(first) = sites.first() else {
            return Err(Error::Domain("volume must be non-empty".into()));
        };
        let dimension = first.dimension();
        if dimension == 0 {
            return Err(Error::Domain("volume dimension must be >= 1".into()));
        }
        if sites.iter().any(|s| s.dimension() != dimension) {
            return Err(Error::Domain("all sites must share one dimension".into()));
        }
        sites.sort();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate site in volume".into()));
        }
        Ok(Volume { sites, dimension })
    }

    /// Centered cube `Λ_n = [-n, n]^d ∩ ℤ^d`.
    pub fn cube(dimension: usize, n: i64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Domain("volume dimension must be >= 1".into()));
        }
        if n < 0 {
            return Err(Error::Domain("cube radius must be >= 0".into()));
        }
        let mut sites = vec![Site(vec![-n; dimension])];
        // odometer over [-n, n]^d
        let mut current = vec![-n; dimension];
        loop {
            let mut k = dimension;
            loop {
                if k == 0 {
                    return Volume::new(sites);
                }
                k -= 1;
                if current[k] < n {
                    current[k] += 1;
                    for c in current.iter_mut().skip(k + 1) {
                        *c = -n;
                    }
                    break;
                }
            }
            sites.push(Site(current.clone()));
        }
    }

    /// 1-d interval `[lo, hi]`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain("empty interval".into()));
        }
        Volume::new((lo..=hi).map(site1).collect())
    }

    pub fn singleton(site: Site) -> Result<Self> {
        Volume::new(vec![site])
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.index_of(site).is_some()
    }

    /// Position of `site` in the lexicographic order, if present.
    pub fn index_of(&self, site: &Site) -> Option<usize> {
        self.sites.binary_search(site).ok()
    }

    pub fn is_subset_of(&self, other: &Volume) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn is_disjoint_from(&self, other: &Volume) -> bool {
        self.sites.iter().all(|s| !other.contains(s))
    }

    pub fn translated(&self, offset: &Site) -> Volume {
        // translation preserves lexicographic order
        Volume {
            sites: self.sites.iter().map(|s| s.translated(offset)).collect(),
            dimension: self.dimension,
        }
    }

    pub fn union(&self, other: &Volume) -> Result<Volume> {
        let mut sites = self.sites.clone();
        sites.extend(other.sites.iter().cloned());
        Volume::new(sites)
    }

    /// True for a 1-d volume of consecutive integers.
    pub fn is_contiguous_interval(&self) -> bool {
        self.dimension == 1
            && self
                .sites
                .windows(2)
                .all(|w| w[1].0[0] == w[0].0[0] + 1)
    }
}

/// The finite configuration space `Ω_Λ = S^Λ` with `S = {0, …, |S|-1}`.
///
/// Configurations are ranked little-endian in volume order: the symbol at
/// the first site of the volume is the least significant digit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpace {
    volume: Volume,
    alphabet_size: usize,
}

impl ConfigSpace {
    pub fn new(volume: Volume, alphabet_size: usize) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::Domain("alphabet size must be >= 2".into()));
        }
        let states = (alphabet_size as u128).checked_pow(volume.len() as u32);
        match states {
            Some(s) if s <= EXACT_STATE_CAP as u128 => Ok(ConfigSpace {
                volume,
                alphabet_size,
            }),
            Some(s) => Err(Error::Capacity {
                states: s,
                cap: EXACT_STATE_CAP,
            }),
            None => Err(Error::Capacity {
                states: u128::MAX,
                cap: EXACT_STATE_CAP,
            }),
        }
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_sites(&self) -> usize {
        self.volume.len()
    }

    /// `|S|^|Λ|`.
    pub fn state_count(&self) -> usize {
        self.alphabet_size.pow(self.volume.len() as u32)
    }

    /// Stride of the digit at volume position `pos`.
    pub fn stride(&self, pos: usize) -> usize {
        self.alphabet_size.pow(pos as u32)
    }

    /// Mixed-radix rank of a per-site symbol assignment given in volume
    /// order. Inverse of [`ConfigSpace::unrank`].
    pub fn rank(&self, config: &[usize]) -> Result<usize> {
        if config.len() != self.volume.len() {
            return Err(Error::Domain(format!(
                "assignment covers {} sites, volume has {}",
                config.len(),
                self.volume.len()
            )));
        }
        let mut index = 0usize;
        let mut stride = 1usize;
        for &symbol in config {
            if symbol >= self.alphabet_size {
                return Err(Error::SymbolOutOfRange {
                    symbol,
                    alphabet: self.alphabet_size,
                });
            }
            index += symbol * stride;
            stride *= self.alphabet_size;
        }
        Ok(index)
    }

    pub fn unrank(&self, mut index: usize) -> Result<Vec<usize>> {
        if index >= self.state_count() {
            return Err(Error::Domain(format!(
                "index {index} out of range for {} states",
                self.state_count()
            )));
        }
        let mut config = Vec::with_capacity(self.volume.len());
        for _ in 0..self.volume.len() {
            config.push(index % self.alphabet_size);
            index /= self.alphabet_size;
        }
        Ok(config)
    }

    /// Symbol at volume position `pos` of the configuration with the given
    /// rank.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.stride(pos)) % self.alphabet_size
    }

    /// Iterate base indices whose digit at `pos` is 0; together with the
    /// stride they enumerate the `|S|^{|Λ|-1}` off-site contexts.
    pub fn contexts(&self, pos: usize) -> impl Iterator<Item = usize> + '_ {
        let stride = self.stride(pos);
        let block = stride * self.alphabet_size;
        let total = self.state_count();
        (0..total / block)
            .flat_map(move |hi| (0..stride).map(move |lo| hi * block + lo))
    }
}

/// A real-valued function on `Ω_Λ`, stored as a dense table in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFunction {
    space: ConfigSpace,
    values: Vec<f64>,
}

impl LocalFunction {
    pub fn new(space: ConfigSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.state_count() {
            return Err(Error::Domain(format!(
                "table length {} != state count {}",
                values.len(),
                space.state_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite table entry".into()));
        }
        Ok(LocalFunction { space, values })
    }

    pub fn from_fn(space: ConfigSpace, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let values = (0..space.state_count())
            .map(|idx| f(&space.unrank(idx).expect("index in range")))
            .collect();
        LocalFunction::new(space, values)
    }

    pub fn constant(space: ConfigSpace, value: f64) -> Result<Self> {
        let n = space.state_count();
        LocalFunction::new(space, vec![value; n])
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn eval(&self, config: &[usize]) -> Result<f64> {
        Ok(self.values[self.space.rank(config)?])
    }

    /// Pointwise combination with another table on the same space.
    pub fn zip_with(&self, other: &LocalFunction, f: impl Fn(f64, f64) -> f64) -> Result<LocalFunction> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        LocalFunction::new(self.space.clone(), values)
    }

    pub fn scaled(&self, c: f64) -> LocalFunction {
        LocalFunction {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> LocalFunction {
        LocalFunction {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Oscillation `δ_i f`: the largest change of `f` over pairs of
    /// configurations that agree off `i`. Exact, by enumerating all
    /// `|S|^{|Λ|-1}` contexts.
    pub fn oscillation(&self, site: &Site) -> Result<f64> {
        let pos = self
            .space
            .volume
            .index_of(site)
            .ok_or_else(|| Error::SiteNotInVolume(site.0.clone()))?;
        Ok(self.oscillation_at_pos(pos))
    }

    fn oscillation_at_pos(&self, pos: usize) -> f64 {
        let stride = self.space.stride(pos);
        let s = self.space.alphabet_size;
        let mut osc: f64 = 0.0;
        for base in self.space.contexts(pos) {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for a in 0..s {
                let v = self.values[base + a * stride];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            osc = osc.max(hi - lo);
        }
        osc
    }

    /// All per-site oscillations, in volume order.
    pub fn oscillation_vector(&self) -> OscillationVector {
        let deltas = (0..self.space.volume.len())
            .map(|pos| self.oscillation_at_pos(pos))
            .collect();
        OscillationVector {
            volume: self.space.volume.clone(),
            deltas,
        }
    }

    /// `‖δf‖_q`. Zero iff `f` is constant.
    pub fn osc_norm(&self, q: Exponent) -> f64 {
        self.oscillation_vector().norm(q)
    }

    /// Sites where `δ_i f > 0`.
    pub fn dependence_set(&self) -> Vec<Site> {
        let osc = self.oscillation_vector();
        self.space
            .volume
            .sites()
            .iter()
            .zip(&osc.deltas)
            .filter(|(_, d)| **d > 0.0)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Block sum `T_{Λ_n}(f) = Σ_{j ∈ Λ_n} τ_j f`, for `f` living on the
    /// centered cube `Λ_r`; the result lives on `Λ_{n+r}`.
    pub fn block_sum(&self, n: i64) -> Result<LocalFunction> {
        let d = self.space.volume.dimension();
        let r = cube_radius(&self.space.volume)?;
        let target_volume = Volume::cube(d, n + r)?;
        let target = ConfigSpace::new(target_volume, self.space.alphabet_size)?;
        let shifts = Volume::cube(d, n)?;

        // position map per shift: source position k reads target position of
        // site (source_site - j)
        let mut maps: Vec<Vec<usize>> = Vec::with_capacity(shifts.len());
        for j in shifts.sites() {
            let map = self
                .space
                .volume
                .sites()
                .iter()
                .map(|u| {
                    let shifted = Site(u.0.iter().zip(&j.0).map(|(a, b)| a - b).collect());
                    target
                        .volume
                        .index_of(&shifted)
                        .expect("shifted dependence site fits the target cube")
                })
                .collect();
            maps.push(map);
        }

        let mut values = vec![0.0; target.state_count()];
        let mut config = vec![0usize; target.num_sites()];
        for (idx, slot) in values.iter_mut().enumerate() {
            let mut rem = idx;
            for c in config.iter_mut() {
                *c = rem % target.alphabet_size;
                rem /= target.alphabet_size;
            }
            let mut acc = 0.0;
            for map in &maps {
                let mut source_index = 0usize;
                let mut stride = 1usize;
                for &tpos in map {
                    source_index += config[tpos] * stride;
                    stride *= self.space.alphabet_size;
                }
                acc += self.values[source_index];
            }
            *slot = acc;
        }
        LocalFunction::new(target, values)
    }

    /// Block average `A_{Λ_m}(f) = T_{Λ_m}(f) / |Λ_m|`.
    pub fn block_average(&self, m: i64) -> Result<LocalFunction> {
        let d = self.space.volume.dimension();
        let count = Volume::cube(d, m)?.len() as f64;
        Ok(self.block_sum(m)?.scaled(1.0 / count))
    }
}

/// Radius of a centered cube volume; error if the volume is not one.
fn cube_radius(volume: &Volume) -> Result<i64> {
    let d = volume.dimension();
    let r = volume
        .sites()
        .iter()
        .flat_map(|s| s.0.iter().map(|c| c.abs()))
        .max()
        .unwrap_or(0);
    let cube = Volume::cube(d, r)?;
    if cube == *volume {
        Ok(r)
    } else {
        Err(Error::Domain("volume is not a centered cube".into()))
    }
}

/// The per-site oscillations `δ_i f` of a local function, indexed by its
/// volume.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationVector {
    volume: Volume,
    deltas: Vec<f64>,
}

impl OscillationVector {
    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn delta_at(&self, site: &Site) -> Option<f64> {
        self.volume.index_of(site).map(|pos| self.deltas[pos])
    }

    /// `(Σ_i (δ_i f)^q)^{1/q}`, with exact max semantics at `q = ∞`.
    pub fn norm(&self, q: Exponent) -> f64 {
        lq_norm(&self.deltas, q)
    }
}

/// `ℓ^q` norm of a nonnegative vector, exact max semantics at `q = ∞`.
pub fn lq_norm(values: &[f64], q: Exponent) -> f64 {
    match q {
        Exponent::Infinity => values.iter().cloned().fold(0.0, f64::max),
        Exponent::Finite(_) => {
            let p = q.as_f64();
            if p == 1.0 {
                values.iter().sum()
            } else {
                values.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exponent;

    fn spin(sym: usize) -> f64 {
        2.0 * sym as f64 - 1.0
    }

    #[test]
    fn rank_examples() {
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        assert_eq!(space.rank(&[0, 0]).unwrap(), 0);
        assert_eq!(space.rank(&[1, 1]).unwrap(), 3);
        let single = ConfigSpace::new(Volume::singleton(site1(0)).unwrap(), 3).unwrap();
        assert_eq!(single.rank(&[2]).unwrap(), 2);
    }

    #[test]
    fn rank_rejects_out_of_range_symbol() {
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        assert!(matches!(
            space.rank(&[0, 2]),
            Err(Error::SymbolOutOfRange { .. })
        ));
        assert!(space.rank(&[0]).is_err());
    }

    #[test]
    fn rank_unrank_round_trip() {
        for (sites, s) in [(3_i64, 4usize), (5, 3), (11, 2), (2, 8)] {
            let space =
                ConfigSpace::new(Volume::interval(0, sites - 1).unwrap(), s).unwrap();
            assert!(space.state_count() <= 4096 * 16);
            for idx in 0..space.state_count() {
                let config = space.unrank(idx).unwrap();
                assert_eq!(space.rank(&config).unwrap(), idx);
            }
        }
    }

    #[test]
    fn capacity_cap_enforced() {
        assert!(matches!(
            ConfigSpace::new(Volume::interval(0, 20).unwrap(), 2),
            Err(Error::Capacity { .. })
        ));
        // 2^20 exactly is allowed
        assert!(ConfigSpace::new(Volume::interval(0, 19).unwrap(), 2).is_ok());
    }

    #[test]
    fn oscillation_of_coordinate_indicator() {
        let space = ConfigSpace::new(Volume::singleton(site1(0)).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| c[0] as f64).unwrap();
        assert_eq!(f.oscillation(&site1(0)).unwrap(), 1.0);
    }

    #[test]
    fn oscillation_of_additive_function() {
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| (c[0] + c[1]) as f64).unwrap();
        assert_eq!(f.oscillation(&site1(0)).unwrap(), 1.0);
        assert_eq!(f.oscillation(&site1(1)).unwrap(), 1.0);
        assert_eq!(f.osc_norm(Exponent::TWO), 2.0_f64.sqrt());
    }

    #[test]
    fn oscillation_of_weighted_spin_sum() {
        // f(σ) = Σ_{|i| ≤ 1} σ_i / (1 + |i|) on S = {-1, 1}
        let space = ConfigSpace::new(Volume::interval(-1, 1).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space.clone(), |c| {
            let sites = [-1_i64, 0, 1];
            c.iter()
                .zip(sites)
                .map(|(&sym, i)| spin(sym) / (1.0 + i.abs() as f64))
                .sum()
        })
        .unwrap();
        assert!((f.oscillation(&site1(-1)).unwrap() - 1.0).abs() < 1e-12);
        assert!((f.oscillation(&site1(0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((f.oscillation(&site1(1)).unwrap() - 1.0).abs() < 1e-12);
        assert!((f.osc_norm(Exponent::TWO) - 6.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oscillation_rejects_site_outside_volume() {
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        let f = LocalFunction::constant(space, 1.0).unwrap();
        assert!(f.oscillation(&site1(7)).is_err());
    }

    #[test]
    fn osc_norm_of_constant_is_zero() {
        let space = ConfigSpace::new(Volume::interval(0, 2).unwrap(), 3).unwrap();
        let f = LocalFunction::constant(space, 4.2).unwrap();
        for q in [
            Exponent::ONE,
            Exponent::TWO,
            Exponent::rational(3, 2).unwrap(),
            Exponent::Infinity,
        ] {
            assert_eq!(f.osc_norm(q), 0.0);
        }
    }

    #[test]
    fn osc_norm_single_indicator_is_one_for_every_q() {
        let space = ConfigSpace::new(Volume::interval(0, 1).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| c[0] as f64).unwrap();
        for q in [Exponent::ONE, Exponent::TWO, Exponent::integer(5).unwrap(), Exponent::Infinity] {
            assert!((f.osc_norm(q) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn osc_norm_monotone_nonincreasing_in_q() {
        let space = ConfigSpace::new(Volume::interval(0, 2).unwrap(), 3).unwrap();
        let f = LocalFunction::from_fn(space, |c| {
            (c[0] as f64).sin() + 0.7 * (c[1] as f64) * (c[2] as f64)
        })
        .unwrap();
        let qs = [
            Exponent::ONE,
            Exponent::rational(3, 2).unwrap(),
            Exponent::TWO,
            Exponent::integer(5).unwrap(),
            Exponent::Infinity,
        ];
        let norms: Vec<f64> = qs.iter().map(|q| f.osc_norm(*q)).collect();
        for w in norms.windows(2) {
            assert!(w[0] >= w[1] - 1e-12, "ℓ^q nesting violated: {norms:?}");
        }
    }

    #[test]
    fn global_oscillation_bounded_by_l1_norm() {
        let space = ConfigSpace::new(Volume::interval(0, 2).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| {
            (c[0] as f64) * 1.3 - (c[1] as f64) * 0.4 + ((c[2] + c[0]) as f64).cos()
        })
        .unwrap();
        let spread = f.max_value() - f.min_value();
        assert!(spread <= f.osc_norm(Exponent::ONE) + 1e-12);
    }

    #[test]
    fn basic_estimate_exhaustive() {
        // |f(η) - f(σ)| ≤ Σ_i δ_i f · 1{σ_i ≠ η_i} on all pairs, |Λ| ≤ 3, |S| ≤ 3
        for (len, s) in [(2_i64, 2usize), (3, 2), (2, 3), (3, 3)] {
            let space = ConfigSpace::new(Volume::interval(0, len - 1).unwrap(), s).unwrap();
            let f = LocalFunction::from_fn(space.clone(), |c| {
                c.iter()
                    .enumerate()
                    .map(|(k, &v)| ((k + 1) as f64 * v as f64).sin() * (k as f64 + 0.5))
                    .sum()
            })
            .unwrap();
            let deltas = f.oscillation_vector();
            let n = space.state_count();
            for a in 0..n {
                let ca = space.unrank(a).unwrap();
                for b in 0..n {
                    let cb = space.unrank(b).unwrap();
                    let bound: f64 = deltas
                        .deltas()
                        .iter()
                        .zip(ca.iter().zip(&cb))
                        .map(|(d, (x, y))| if x != y { *d } else { 0.0 })
                        .sum();
                    assert!(
                        (f.value_at(a) - f.value_at(b)).abs() <= bound + 1e-12,
                        "basic estimate failed for pair ({a}, {b})"
                    );
                }
            }
        }
    }

    #[test]
    fn block_sum_with_zero_shift_is_identity() {
        let space = ConfigSpace::new(Volume::cube(1, 1).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| c[0] as f64 + 2.0 * c[2] as f64).unwrap();
        let t = f.block_sum(0).unwrap();
        assert_eq!(t.values(), f.values());
    }

    #[test]
    fn block_sum_of_single_spin() {
        // f(σ) = σ_0 on S = {-1, 1}; T_{Λ_1} f = σ_{-1} + σ_0 + σ_1
        let space = ConfigSpace::new(Volume::cube(1, 0).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| spin(c[0])).unwrap();
        let t = f.block_sum(1).unwrap();
        assert_eq!(t.space().num_sites(), 3);
        let expect = LocalFunction::from_fn(t.space().clone(), |c| {
            c.iter().map(|&v| spin(v)).sum()
        })
        .unwrap();
        assert_eq!(t.values(), expect.values());
        assert!((t.osc_norm(Exponent::ONE) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn block_sum_young_bound() {
        // ‖δ(T_{Λ_n} f)‖_q ≤ |Λ_n|^{1/q} ‖δf‖_1
        let space = ConfigSpace::new(Volume::cube(1, 1).unwrap(), 2).unwrap();
        let f = LocalFunction::from_fn(space, |c| {
            spin(c[0]) * 0.3 + spin(c[1]) * spin(c[2]) * 0.9
        })
        .unwrap();
        let l1 = f.osc_norm(Exponent::ONE);
        for n in [0_i64, 1, 2] {
            let t = f.block_sum(n).unwrap();
            let cube = Volume::cube(1, n).unwrap().len() as f64;
            for q in [Exponent::ONE, Exponent::TWO, Exponent::Infinity] {
                let bound = cube.powf(1.0 / q.as_f64()) * l1;
                assert!(
                    t.osc_norm(q) <= bound + 1e-9,
                    "Young bound failed at n={n}, q={q}"
                );
            }
        }
    }

    #[test]
    fn block_average_young_bound() {
        // ‖δ(A_{Λ_m} f)‖_q ≤ ‖δf‖_1 / |Λ_m|^{1/p}, p conjugate to q
        let space = ConfigSpace::new(Volume::cube(1, 0).unwrap(), 3).unwrap();
        let f = LocalFunction::from_fn(space, |c| (c[0] as f64).powi(2)).unwrap();
        let l1 = f.osc_norm(Exponent::ONE);
        for m in [1_i64, 2] {
            let a = f.block_average(m).unwrap();
            let cube = Volume::cube(1, m).unwrap().len() as f64;
            for q in [Exponent::ONE, Exponent::TWO, Exponent::Infinity] {
                let p = q.conjugate();
                let bound = l1 / cube.powf(1.0 / p.as_f64());
                assert!(a.osc_norm(q) <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn cube_volumes_and_ordering() {
        let v = Volume::cube(2, 1).unwrap();
        assert_eq!(v.len(), 9);
        let sites = v.sites();
        assert_eq!(sites[0], Site(vec![-1, -1]));
        assert_eq!(sites[8], Site(vec![1, 1]));
        for w in sites.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn volume_rejects_duplicates_and_mixed_dims() {
        assert!(Volume::new(vec![site1(0), site1(0)]).is_err());
        assert!(Volume::new(vec![site1(0), Site(vec![0, 1])]).is_err());
        assert!(Volume::new(vec![]).is_err());
    }
}
