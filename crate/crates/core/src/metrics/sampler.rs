use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::experiment::TestCase;
use crate::metrics::{EfficiencyFunction, EFF_TOLERANCE};
use crate::partition::EquivalenceClassifier;
use crate::seed::Rng;

const EQUALIZE_ATTEMPTS: usize = 1000;

/// Draws random test sets from some fixed supply of cases.
pub trait TestSetSampler: Sync {
    fn pool(&self) -> &[TestCase];

    fn draw(&self, rng: &mut Rng) -> Result<Vec<TestCase>>;

    /// Two sets with equal efficiency (within [`EFF_TOLERANCE`]).
    fn draw_equal_pair(
        &self,
        rng: &mut Rng,
        eff: &EfficiencyFunction,
    ) -> Result<(Vec<TestCase>, Vec<TestCase>)>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMode {
    /// Random subsets of random size; equal pairs by rejection.
    Uniform,
    /// A fixed number of members from every class.
    Stratified { per_class: usize },
    /// Both sets of a pair touch the same randomly chosen classes.
    ClassAligned,
    /// Pairs are a set and its copy.
    Mirrored,
}

/// Samples subsets, without replacement, of a pool of cases.
#[derive(Clone, Debug)]
pub struct PoolSampler {
    pool: Vec<TestCase>,
    classes: BTreeMap<String, Vec<usize>>,
    mode: SamplerMode,
    max_size: usize,
}

impl PoolSampler {
    pub fn new(pool: Vec<TestCase>, mode: SamplerMode) -> Result<Self> {
        if matches!(mode, SamplerMode::Stratified { .. } | SamplerMode::ClassAligned) {
            return Err(Error::InvalidBound(
                "class-based sampling needs a classifier".into(),
            ));
        }
        let max_size = pool.len();
        Ok(PoolSampler {
            pool,
            classes: BTreeMap::new(),
            mode,
            max_size,
        })
    }

    pub fn with_classifier(
        pool: Vec<TestCase>,
        classifier: &EquivalenceClassifier,
        mode: SamplerMode,
    ) -> Result<Self> {
        let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, case) in pool.iter().enumerate() {
            classes.entry(classifier.classify(case)?).or_default().push(i);
        }
        if let SamplerMode::Stratified { per_class } = mode {
            if per_class == 0 {
                return Err(Error::InvalidCount { min: 1, got: 0 });
            }
            if let Some((k, _)) = classes.iter().find(|(_, m)| m.len() < per_class) {
                return Err(Error::EmptyClass(format!(
                    "{k} has fewer than {per_class} members"
                )));
            }
        }
        let max_size = pool.len();
        Ok(PoolSampler {
            pool,
            classes,
            mode,
            max_size,
        })
    }

    /// Caps the size of uniformly drawn sets.
    pub fn max_size(mut self, n: usize) -> Self {
        self.max_size = n.min(self.pool.len());
        self
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn classes(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.classes
    }

    fn pick(&self, members: &[usize], k: usize, rng: &mut Rng, out: &mut Vec<TestCase>) {
        for j in index::sample(rng, members.len(), k) {
            out.push(self.pool[members[j]].clone());
        }
    }

    fn uniform(&self, rng: &mut Rng) -> Vec<TestCase> {
        let k = rng.random_range(0..=self.max_size);
        index::sample(rng, self.pool.len(), k)
            .into_iter()
            .map(|i| self.pool[i].clone())
            .collect()
    }

    fn stratified(&self, per_class: usize, rng: &mut Rng) -> Vec<TestCase> {
        let mut out = Vec::with_capacity(per_class * self.classes.len());
        for members in self.classes.values() {
            self.pick(members, per_class, rng, &mut out);
        }
        out
    }

    fn aligned_pair(&self, rng: &mut Rng) -> (Vec<TestCase>, Vec<TestCase>) {
        let keys: Vec<&String> = self.classes.keys().collect();
        let chosen: BTreeSet<usize> = if keys.is_empty() {
            BTreeSet::new()
        } else {
            let k = rng.random_range(1..=keys.len());
            index::sample(rng, keys.len(), k).into_iter().collect()
        };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for &c in &chosen {
            let members = &self.classes[keys[c]];
            let na = rng.random_range(1..=members.len());
            let nb = rng.random_range(1..=members.len());
            self.pick(members, na, rng, &mut a);
            self.pick(members, nb, rng, &mut b);
        }
        (a, b)
    }

    fn one_set(&self, rng: &mut Rng) -> Vec<TestCase> {
        match self.mode {
            SamplerMode::Uniform | SamplerMode::Mirrored => self.uniform(rng),
            SamplerMode::Stratified { per_class } => self.stratified(per_class, rng),
            SamplerMode::ClassAligned => self.aligned_pair(rng).0,
        }
    }
}

fn equal(eff: &EfficiencyFunction, a: &[TestCase], b: &[TestCase]) -> Result<bool> {
    Ok((eff.eval(a)? - eff.eval(b)?).abs() <= EFF_TOLERANCE)
}

impl TestSetSampler for PoolSampler {
    fn pool(&self) -> &[TestCase] {
        &self.pool
    }

    fn draw(&self, rng: &mut Rng) -> Result<Vec<TestCase>> {
        Ok(self.one_set(rng))
    }

    fn draw_equal_pair(
        &self,
        rng: &mut Rng,
        eff: &EfficiencyFunction,
    ) -> Result<(Vec<TestCase>, Vec<TestCase>)> {
        for _ in 0..EQUALIZE_ATTEMPTS {
            let (a, b) = match self.mode {
                SamplerMode::Mirrored => {
                    let a = self.uniform(rng);
                    let b = a.clone();
                    (a, b)
                }
                SamplerMode::ClassAligned => self.aligned_pair(rng),
                _ => (self.one_set(rng), self.one_set(rng)),
            };
            if equal(eff, &a, &b)? {
                return Ok((a, b));
            }
        }
        Err(Error::SamplerCannotEqualize(format!(
            "no equally efficient pair under `{}` in {EQUALIZE_ATTEMPTS} attempts",
            eff.name()
        )))
    }
}
