use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::{stream_rng, Stream};

/// Gaussian-cluster data with a superclass/subclass hierarchy. Each subclass
/// is one isotropic cluster; the class label is the subclass's superclass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub k_super: usize,
    pub s_sub: usize,
    pub d: usize,
    pub n: usize,
    pub cluster_sigma: f64,
    /// Norm of every cluster center.
    pub separation: f64,
}

/// Center norm used by [`SyntheticSpec::default`]. With `d = 32` and
/// `cluster_sigma = 0.3` it leaves a one-classifier baseline clearly
/// imperfect while keeping subclasses identifiable enough for routing.
pub const DEFAULT_SEPARATION: f64 = 1.5;

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            k_super: 20,
            s_sub: 100,
            d: 32,
            n: 20_000,
            cluster_sigma: 0.3,
            separation: DEFAULT_SEPARATION,
        }
    }
}

impl SyntheticSpec {
    /// A few hundred instances; handy for smoke tests.
    pub fn small() -> Self {
        Self {
            k_super: 4,
            s_sub: 12,
            d: 6,
            n: 600,
            cluster_sigma: 0.3,
            separation: DEFAULT_SEPARATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_super < 2 || self.s_sub == 0 || self.s_sub % self.k_super != 0 {
            return Err(Error::Config(format!(
                "{} subclasses cannot be split evenly into {} superclasses",
                self.s_sub, self.k_super
            )));
        }
        if self.d < 2 {
            return Err(Error::Config(format!("need d >= 2, got {}", self.d)));
        }
        if !(self.cluster_sigma >= 0.0) || !(self.separation > 0.0) {
            return Err(Error::Config("cluster_sigma must be >= 0 and separation > 0".into()));
        }
        Ok(())
    }
}

pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let (s, d, n) = (spec.s_sub, spec.d, spec.n);

    let mut rng = stream_rng(seed, Stream::DataCenters, 0);
    let mut centers = Vec::with_capacity(s * d);
    for _ in 0..s {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        centers.extend(v.iter().map(|x| x / norm * spec.separation));
    }

    // Balanced random assignment of subclasses to superclasses.
    let mut rng = stream_rng(seed, Stream::SubclassMap, 0);
    let mut perm: Vec<usize> = (0..s).collect();
    perm.shuffle(&mut rng);
    let per_super = s / spec.k_super;
    let mut map = vec![0; s];
    for (slot, &sub) in perm.iter().enumerate() {
        map[sub] = slot / per_super;
    }

    let mut rng = stream_rng(seed, Stream::DataSamples, 0);
    let mut subclasses: Vec<usize> = (0..n).map(|i| i % s + 1).collect();
    subclasses.shuffle(&mut rng);
    let mut data = Vec::with_capacity(n * d);
    for &sub in &subclasses {
        let c = &centers[(sub - 1) * d..sub * d];
        for &ci in c {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(ci + spec.cluster_sigma * z);
        }
    }
    let labels = subclasses.iter().map(|&sub| map[sub - 1]).collect();
    Dataset::new(Matrix::from_vec(n, d, data)?, labels, spec.k_super)?
        .with_subclasses(subclasses, s)?
        .with_superclass_map(map)
}

/// Binary task whose instances carry a binary group attribute. Dimension 0
/// encodes the group (`+1` / `-1`); the label signal lives in a
/// group-specific block of the remaining dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinaryGroupSpec {
    pub n: usize,
    pub d: usize,
    /// Probability that an instance belongs to group 1.
    pub group_ratio: f64,
    pub noise: f64,
    pub margin: f64,
}

impl Default for BinaryGroupSpec {
    fn default() -> Self {
        Self::new(10_000, 8, 0.5)
    }
}

impl BinaryGroupSpec {
    pub fn new(n: usize, d: usize, group_ratio: f64) -> Self {
        Self {
            n,
            d,
            group_ratio,
            noise: 1.0,
            margin: 1.0,
        }
    }
}

pub fn gen_binary_group_data(spec: &BinaryGroupSpec, seed: u64) -> Result<Dataset> {
    if !(spec.group_ratio > 0.0 && spec.group_ratio < 1.0) {
        return Err(Error::Config(format!(
            "group_ratio must be in (0, 1), got {}",
            spec.group_ratio
        )));
    }
    if spec.d < 2 || !(spec.noise >= 0.0) {
        return Err(Error::Config("need d >= 2 and noise >= 0".into()));
    }
    let d = spec.d;
    let rest = d - 1;
    let half = rest.div_ceil(2);
    let block = |g: u8| -> std::ops::Range<usize> {
        if rest == 1 {
            1..2
        } else if g == 0 {
            1..1 + half
        } else {
            1 + half..d
        }
    };
    let mut rng = stream_rng(seed, Stream::DataSamples, 1);
    let mut data = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    let mut groups = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let g = u8::from(rng.random::<f64>() < spec.group_ratio);
        let y = usize::from(rng.random::<bool>());
        let mut x = vec![0.0; d];
        x[0] = if g == 0 { 1.0 } else { -1.0 };
        let dims = block(g);
        let scale = spec.margin / (dims.len() as f64).sqrt();
        // In the shared-block case the groups use opposite label directions.
        let sign = if rest == 1 && g == 1 { -1.0 } else { 1.0 };
        let signed = if y == 1 { scale } else { -scale } * sign;
        for v in &mut x[dims] {
            *v = signed;
        }
        for v in &mut x {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += spec.noise * z;
        }
        data.extend(x);
        labels.push(y);
        groups.push(g);
    }
    Dataset::new(Matrix::from_vec(spec.n, d, data)?, labels, 2)?.with_groups(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_clusters_are_points() {
        let spec = SyntheticSpec {
            cluster_sigma: 0.0,
            ..SyntheticSpec::small()
        };
        let ds = gen_synthetic(&spec, 4).unwrap();
        let subs = ds.subclasses().unwrap();
        // nearest-centroid oracle over the per-subclass means
        let d = ds.dim();
        let mut centroids = vec![vec![0.0; d]; spec.s_sub];
        let mut counts = vec![0usize; spec.s_sub];
        for i in 0..ds.len() {
            let s = subs[i] - 1;
            counts[s] += 1;
            for (c, x) in centroids[s].iter_mut().zip(ds.features().row(i)) {
                *c += x;
            }
        }
        for (c, &k) in centroids.iter_mut().zip(&counts) {
            c.iter_mut().for_each(|v| *v /= k as f64);
        }
        let map = ds.superclass_map().unwrap();
        let mut correct = 0;
        for i in 0..ds.len() {
            let x = ds.features().row(i);
            let first = (0..ds.len()).find(|&j| subs[j] == subs[i]).unwrap();
            assert_eq!(x, ds.features().row(first));
            let nearest = (0..spec.s_sub)
                .min_by(|&a, &b| {
                    let da: f64 = centroids[a].iter().zip(x).map(|(c, v)| (c - v).powi(2)).sum();
                    let db: f64 = centroids[b].iter().zip(x).map(|(c, v)| (c - v).powi(2)).sum();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            if map[nearest] == ds.labels()[i] {
                correct += 1;
            }
        }
        assert_eq!(correct, ds.len());
    }

    #[test]
    fn balanced_and_deterministic() {
        let spec = SyntheticSpec::small();
        let a = gen_synthetic(&spec, 9).unwrap();
        let b = gen_synthetic(&spec, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_synthetic(&spec, 10).unwrap());
        let mut counts = vec![0; spec.s_sub];
        for &s in a.subclasses().unwrap() {
            counts[s - 1] += 1;
        }
        assert!(counts.iter().all(|&c| c == spec.n / spec.s_sub));
        let mut per_super = vec![0; spec.k_super];
        for &s in a.superclass_map().unwrap() {
            per_super[s] += 1;
        }
        assert!(per_super.iter().all(|&c| c == spec.s_sub / spec.k_super));
    }

    #[test]
    fn rejects_uneven_hierarchy() {
        let spec = SyntheticSpec {
            s_sub: 10,
            k_super: 4,
            ..SyntheticSpec::small()
        };
        assert!(matches!(gen_synthetic(&spec, 0), Err(Error::Config(_))));
        let spec = SyntheticSpec {
            d: 1,
            ..SyntheticSpec::small()
        };
        assert!(gen_synthetic(&spec, 0).is_err());
    }

    #[test]
    fn group_counts_follow_ratio() {
        let ds = gen_binary_group_data(&BinaryGroupSpec::new(10_000, 8, 0.5), 1).unwrap();
        let ones = ds.groups().unwrap().iter().filter(|&&g| g == 1).count();
        assert!((ones as i64 - 5000).abs() <= 150, "{ones}");
        assert_eq!(ds, gen_binary_group_data(&BinaryGroupSpec::new(10_000, 8, 0.5), 1).unwrap());
        assert!(gen_binary_group_data(&BinaryGroupSpec::new(10, 8, 1.0), 1).is_err());
    }

    #[test]
    fn groups_linearly_separable_without_noise() {
        let spec = BinaryGroupSpec {
            noise: 0.0,
            ..BinaryGroupSpec::new(2_000, 2, 0.3)
        };
        let ds = gen_binary_group_data(&spec, 2).unwrap();
        // Linear probe: sign of the first coordinate.
        let hits = (0..ds.len())
            .filter(|&i| u8::from(ds.features().get(i, 0) < 0.0) == ds.groups().unwrap()[i])
            .count();
        assert!(hits as f64 / ds.len() as f64 >= 0.99);
    }
}
