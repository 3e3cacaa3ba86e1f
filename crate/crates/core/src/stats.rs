//! Ensemble statistics over Leibnizian strings of fixed length.
//!
//! Each position of a Leibnizian string sees a *view*: its neighborhood at the
//! position's absolute indifference radius. Views never repeat inside one
//! string, so they behave like fermionic levels. A string's energy is
//! `γ·variety`, and occupation averages are taken in the canonical ensemble
//! of all Leibnizian strings of one length.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::strcore::{
    canonicalize, conditional_entropy, indifference_profile, is_leibnizian, neighborhood,
    variety_of_profile, Alphabet, CanonMode, CyclicString, PairMode, Rational, StringError, Symbol,
    Variety,
};

/// Largest `ν^N` an exhaustive enumeration will walk.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 24;
pub const MIN_SCAN_SAMPLES: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error(transparent)]
    String(#[from] StringError),
    #[error("{count} candidate strings exceed the enumeration cap {cap}")]
    TooLarge { count: u128, cap: u64 },
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("string {0} is not Leibnizian")]
    NotLeibnizian(String),
    #[error("cannot place {n} particles on {m} levels")]
    TooManyParticles { n: usize, m: usize },
    #[error("beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error("{got} samples given, at least {need} required")]
    InsufficientSamples { got: usize, need: usize },
    #[error("no Leibnizian string found after {attempts} draws")]
    SamplingExhausted { attempts: usize },
    #[error("length range {min}..={max} is empty")]
    BadLengthRange { min: usize, max: usize },
}

/// A neighborhood read as a linear word; its length is `2·radius + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct View {
    pub radius: usize,
    pub sequence: Vec<Symbol>,
}

impl View {
    pub fn render(&self, alphabet: &Alphabet) -> String {
        alphabet.render(&self.sequence)
    }
}

/// All strings of length `n` that pass the Leibnizian test, one per class of
/// `canon`, in lexicographic symbol order.
pub fn enumerate_leibnizian(
    alphabet: &Arc<Alphabet>,
    n: usize,
    canon: CanonMode,
    cap: u64,
) -> Result<Vec<CyclicString>, StatsError> {
    let nu = alphabet.len() as u128;
    let count = nu.checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(StatsError::TooLarge { count, cap });
    }
    if n < 3 || nu < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut symbols = vec![0 as Symbol; n];
    loop {
        let s = CyclicString::new(alphabet.clone(), symbols.clone())?;
        if is_leibnizian(&s) && (canon == CanonMode::Literal || canonicalize(&s, canon) == s) {
            out.push(s);
        }
        // odometer, last position fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            symbols[k] += 1;
            if (symbols[k] as u128) < nu {
                break;
            }
            symbols[k] = 0;
        }
    }
}

/// One view per position.
pub fn views_of(s: &CyclicString) -> Result<Vec<View>, StatsError> {
    let profile = indifference_profile(s)?;
    if !profile.is_leibnizian() {
        return Err(StatsError::NotLeibnizian(s.render()));
    }
    profile
        .a
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            Ok(View {
                radius: a,
                sequence: neighborhood(s, i, a)?,
            })
        })
        .collect()
}

/// Strings with their varieties and views, computed once.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub strings: Vec<CyclicString>,
    pub varieties: Vec<Variety>,
    pub views: Vec<Vec<View>>,
}

impl Ensemble {
    pub fn new(strings: Vec<CyclicString>) -> Result<Self, StatsError> {
        if strings.is_empty() {
            return Err(StatsError::EmptyEnsemble);
        }
        let mut varieties = Vec::with_capacity(strings.len());
        let mut views = Vec::with_capacity(strings.len());
        for s in &strings {
            let profile = indifference_profile(s)?;
            varieties.push(variety_of_profile(&profile));
            views.push(views_of(s)?);
        }
        Ok(Self {
            strings,
            varieties,
            views,
        })
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    fn weights(&self, beta: f64, gamma: f64) -> Vec<f64> {
        self.varieties
            .iter()
            .map(|v| (-beta * gamma * v.to_f64()).exp())
            .collect()
    }

    /// `Σ exp(-βγ·variety)`.
    pub fn partition_function(&self, beta: f64, gamma: f64) -> f64 {
        self.weights(beta, gamma).iter().sum()
    }

    /// Boltzmann-weighted frequency of `view` across the ensemble.
    pub fn occupation(&self, view: &View, beta: f64, gamma: f64) -> f64 {
        let w = self.weights(beta, gamma);
        let hit: f64 = self
            .views
            .iter()
            .zip(&w)
            .filter(|(vs, _)| vs.contains(view))
            .map(|(_, w)| w)
            .sum();
        hit / w.iter().sum::<f64>()
    }

    /// Every occurring view with its expected occupation, ordered by view.
    pub fn occupations(&self, beta: f64, gamma: f64) -> BTreeMap<View, f64> {
        let w = self.weights(beta, gamma);
        let z: f64 = w.iter().sum();
        let mut acc: BTreeMap<View, f64> = BTreeMap::new();
        for (vs, wl) in self.views.iter().zip(&w) {
            for v in vs {
                *acc.entry(v.clone()).or_default() += wl;
            }
        }
        acc.values_mut().for_each(|x| *x /= z);
        acc
    }
}

pub fn partition_function(
    strings: &[CyclicString],
    beta: f64,
    gamma: f64,
) -> Result<f64, StatsError> {
    Ok(Ensemble::new(strings.to_vec())?.partition_function(beta, gamma))
}

pub fn occupation_expectation(
    view: &View,
    strings: &[CyclicString],
    beta: f64,
    gamma: f64,
) -> Result<f64, StatsError> {
    Ok(Ensemble::new(strings.to_vec())?.occupation(view, beta, gamma))
}

/// Ensemble parameters.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub alphabet: Arc<Alphabet>,
    pub length: usize,
    pub beta: f64,
    pub gamma: f64,
    pub canon_mode: CanonMode,
}

impl EnsembleSpec {
    pub fn new(alphabet: Arc<Alphabet>, length: usize) -> Self {
        Self {
            alphabet,
            length,
            beta: 1.0,
            gamma: 1.0,
            canon_mode: CanonMode::Literal,
        }
    }

    fn check(&self) -> Result<(), StatsError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(StatsError::BadBeta(self.beta));
        }
        Ok(())
    }

    pub fn ensemble(&self, length: usize, cap: u64) -> Result<Ensemble, StatsError> {
        Ensemble::new(enumerate_leibnizian(
            &self.alphabet,
            length,
            self.canon_mode,
            cap,
        )?)
    }
}

/// `(1/β)·ln(Z(N-1)/Z(N))`.
pub fn chemical_potential(spec: &EnsembleSpec, cap: u64) -> Result<f64, StatsError> {
    spec.check()?;
    let n = spec.length;
    let z_n = spec
        .ensemble(n, cap)?
        .partition_function(spec.beta, spec.gamma);
    let z_prev = spec
        .ensemble(n.saturating_sub(1), cap)?
        .partition_function(spec.beta, spec.gamma);
    Ok((z_prev / z_n).ln() / spec.beta)
}

/// `1 / (exp(β(γ/a - μ)) + 1)`.
pub fn fd_prediction(radius: usize, beta: f64, gamma: f64, mu: f64) -> f64 {
    1.0 / ((beta * (gamma / radius as f64 - mu)).exp() + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewRow {
    pub view: String,
    pub radius: usize,
    pub n_expected: f64,
    pub fd_predicted: f64,
    pub abs_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub length: usize,
    pub ensemble_size: usize,
    pub z_n: f64,
    pub z_n_minus_1: f64,
    pub mu: f64,
    pub rows: Vec<ViewRow>,
}

impl EnsembleReport {
    pub fn max_abs_dev(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.abs_dev))
    }

    pub fn occupation_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.n_expected).sum()
    }
}

/// Exact occupations at length `N` next to the Fermi-Dirac curve with `μ`
/// taken from the partition functions at `N` and `N - 1`.
pub fn ensemble_report(spec: &EnsembleSpec, cap: u64) -> Result<EnsembleReport, StatsError> {
    spec.check()?;
    let ens = spec.ensemble(spec.length, cap)?;
    let prev = spec.ensemble(spec.length.saturating_sub(1), cap)?;
    let z_n = ens.partition_function(spec.beta, spec.gamma);
    let z_n_minus_1 = prev.partition_function(spec.beta, spec.gamma);
    let mu = (z_n_minus_1 / z_n).ln() / spec.beta;
    let rows = ens
        .occupations(spec.beta, spec.gamma)
        .into_iter()
        .map(|(v, n_expected)| {
            let fd_predicted = fd_prediction(v.radius, spec.beta, spec.gamma, mu);
            ViewRow {
                view: v.render(&spec.alphabet),
                radius: v.radius,
                n_expected,
                fd_predicted,
                abs_dev: (n_expected - fd_predicted).abs(),
            }
        })
        .collect();
    Ok(EnsembleReport {
        length: spec.length,
        ensemble_size: ens.len(),
        z_n,
        z_n_minus_1,
        mu,
        rows,
    })
}

/// Elementary symmetric polynomials `e_0..=e_k` of `xs`.
fn elementary_symmetric(xs: impl Iterator<Item = f64>, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for x in xs {
        for j in (1..=k).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Exact occupations of `energies.len()` fermionic levels holding exactly `n`
/// particles at inverse temperature `beta`.
pub fn idealized_fd_oracle(energies: &[f64], n: usize, beta: f64) -> Result<Vec<f64>, StatsError> {
    let m = energies.len();
    if n > m {
        return Err(StatsError::TooManyParticles { n, m });
    }
    if n == 0 {
        return Ok(vec![0.0; m]);
    }
    // shift energies so the largest Boltzmann factor is 1
    let floor = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let x: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - floor)).exp())
        .collect();
    let total = elementary_symmetric(x.iter().copied(), n)[n];
    Ok((0..m)
        .map(|s| {
            let rest = elementary_symmetric(
                x.iter()
                    .enumerate()
                    .filter(|(t, _)| *t != s)
                    .map(|(_, v)| *v),
                n - 1,
            );
            x[s] * rest[n - 1] / total
        })
        .collect())
}

/// `(1/β)·ln(e_{N-1}(x)/e_N(x))` for the same independent-level model.
pub fn idealized_chemical_potential(
    energies: &[f64],
    n: usize,
    beta: f64,
) -> Result<f64, StatsError> {
    let m = energies.len();
    if n > m || n == 0 {
        return Err(StatsError::TooManyParticles { n, m });
    }
    let x = energies.iter().map(|e| (-beta * e).exp());
    let e = elementary_symmetric(x, n);
    Ok((e[n - 1] / e[n]).ln() / beta)
}

/// Max-abs gap between exact level occupations and the Fermi-Dirac curve.
pub fn idealized_fd_deviation(energies: &[f64], n: usize, beta: f64) -> Result<f64, StatsError> {
    let exact = idealized_fd_oracle(energies, n, beta)?;
    let mu = idealized_chemical_potential(energies, n, beta)?;
    Ok(exact
        .iter()
        .zip(energies)
        .map(|(o, e)| (o - 1.0 / ((beta * (e - mu)).exp() + 1.0)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub string: String,
    pub cond_entropy: f64,
    pub variety: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub rows: Vec<ScanRow>,
    /// `None` when either coordinate has zero variance.
    pub pearson: Option<f64>,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() != ys.len() || xs.is_empty() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let scale = sxx.max(syy);
    if sxx <= 1e-24 * scale.max(1.0) || syy <= 1e-24 * scale.max(1.0) {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Conditional entropy against variety over the given strings.
pub fn entropy_variety_scan(samples: &[CyclicString]) -> Result<CorrelationReport, StatsError> {
    if samples.len() < MIN_SCAN_SAMPLES {
        return Err(StatsError::InsufficientSamples {
            got: samples.len(),
            need: MIN_SCAN_SAMPLES,
        });
    }
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        let profile = indifference_profile(s)?;
        if !profile.is_leibnizian() {
            return Err(StatsError::NotLeibnizian(s.render()));
        }
        rows.push(ScanRow {
            string: s.render(),
            cond_entropy: conditional_entropy(s, PairMode::Cyclic)?,
            variety: variety_of_profile(&profile).value(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.cond_entropy).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| crate::strcore::ratio_to_f64(&r.variety))
        .collect();
    Ok(CorrelationReport {
        pearson: pearson(&xs, &ys),
        rows,
    })
}

/// Uniform random strings with lengths uniform in `min_len..=max_len`,
/// redrawn until Leibnizian.
pub fn sample_leibnizian(
    alphabet: &Arc<Alphabet>,
    min_len: usize,
    max_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<CyclicString>, StatsError> {
    const MAX_ATTEMPTS_PER_SAMPLE: usize = 100_000;
    if min_len > max_len || max_len < 3 {
        return Err(StatsError::BadLengthRange {
            min: min_len,
            max: max_len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu = alphabet.len() as Symbol;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut attempts = 0;
        let s = loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS_PER_SAMPLE {
                return Err(StatsError::SamplingExhausted {
                    attempts: MAX_ATTEMPTS_PER_SAMPLE,
                });
            }
            let len = rng.gen_range(min_len..=max_len);
            let symbols: Vec<Symbol> = (0..len).map(|_| rng.gen_range(0..nu)).collect();
            let s = CyclicString::new(alphabet.clone(), symbols)?;
            if is_leibnizian(&s) {
                break s;
            }
        };
        out.push(s);
    }
    Ok(out)
}
