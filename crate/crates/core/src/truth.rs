//! Plaintext CRH truth discovery: the reference the secure pipeline is
//! checked against.
//!
//! Continuous objects hold one real per device. Categorical objects hold a
//! one-hot vector over `q` choices, and their truth is a probability vector.
//! Both live in one flat row per device, object `m` occupying
//! `offsets[m] .. offsets[m] + widths[m]`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Floor applied to per-device distances and per-object deviations.
pub const EPSILON: f64 = 1e-9;
/// Default number of CRH rounds.
pub const DEFAULT_ITERATIONS: usize = 10;
/// Early-stop threshold on the largest truth change between rounds.
pub const EARLY_STOP_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TruthError {
    #[error("observation matrix needs at least one device and one object")]
    Empty,
    #[error("row {0} has the wrong length")]
    RaggedRow(usize),
    #[error("device {device}, object {object}: not a one-hot choice vector")]
    NotOneHot { device: usize, object: usize },
    #[error("choice index {choice} out of range for object {object}")]
    ChoiceOutOfRange { object: usize, choice: usize },
    #[error("non-finite observation at device {0}")]
    NonFinite(usize),
    #[error("weights sum to a non-positive value")]
    DegenerateWeights,
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("no device is present")]
    NobodyPresent,
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    kind: DataKind,
    devices: usize,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    row_len: usize,
    values: Vec<f64>,
}

fn offsets_of(widths: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(widths.len());
    let mut acc = 0;
    for &w in widths {
        offsets.push(acc);
        acc += w;
    }
    (offsets, acc)
}

impl ObservationMatrix {
    /// `rows[k][m]` is device `k`'s reading of object `m`.
    pub fn continuous(rows: &[Vec<f64>]) -> Result<Self, TruthError> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 {
            return Err(TruthError::Empty);
        }
        let mut values = Vec::with_capacity(rows.len() * m);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(TruthError::RaggedRow(k));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TruthError::NonFinite(k));
            }
            values.extend_from_slice(row);
        }
        let widths = alloc::vec![1; m];
        let (offsets, row_len) = offsets_of(&widths);
        Ok(Self {
            kind: DataKind::Continuous,
            devices: rows.len(),
            widths,
            offsets,
            row_len,
            values,
        })
    }

    /// `picks[k][m]` is the index of the choice device `k` selects among
    /// `choices[m]` candidates.
    pub fn categorical(choices: &[usize], picks: &[Vec<usize>]) -> Result<Self, TruthError> {
        if picks.is_empty() || choices.is_empty() || choices.contains(&0) {
            return Err(TruthError::Empty);
        }
        let (offsets, row_len) = offsets_of(choices);
        let mut values = alloc::vec![0.0; picks.len() * row_len];
        for (k, row) in picks.iter().enumerate() {
            if row.len() != choices.len() {
                return Err(TruthError::RaggedRow(k));
            }
            for (m, &choice) in row.iter().enumerate() {
                if choice >= choices[m] {
                    return Err(TruthError::ChoiceOutOfRange { object: m, choice });
                }
                values[k * row_len + offsets[m] + choice] = 1.0;
            }
        }
        Ok(Self {
            kind: DataKind::Categorical,
            devices: picks.len(),
            widths: choices.to_vec(),
            offsets,
            row_len,
            values,
        })
    }

    /// Categorical data given as explicit vectors, validated to be one-hot.
    pub fn categorical_vectors(
        choices: &[usize],
        rows: &[Vec<Vec<f64>>],
    ) -> Result<Self, TruthError> {
        let mut picks = Vec::with_capacity(rows.len());
        for (k, row) in rows.iter().enumerate() {
            if row.len() != choices.len() {
                return Err(TruthError::RaggedRow(k));
            }
            let mut pick_row = Vec::with_capacity(row.len());
            for (m, v) in row.iter().enumerate() {
                let ones = v.iter().filter(|&&x| x == 1.0).count();
                let zeros = v.iter().filter(|&&x| x == 0.0).count();
                if v.len() != choices[m] || ones != 1 || ones + zeros != v.len() {
                    return Err(TruthError::NotOneHot {
                        device: k,
                        object: m,
                    });
                }
                pick_row.push(v.iter().position(|&x| x == 1.0).unwrap());
            }
            picks.push(pick_row);
        }
        Self::categorical(choices, &picks)
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    /// `K`.
    pub fn devices(&self) -> usize {
        self.devices
    }

    /// `M`.
    pub fn objects(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.row_len..(k + 1) * self.row_len]
    }

    pub fn get(&self, k: usize, m: usize) -> &[f64] {
        let start = k * self.row_len + self.offsets[m];
        &self.values[start..start + self.widths[m]]
    }

    /// Scalar reading of a continuous object.
    pub fn value(&self, k: usize, m: usize) -> f64 {
        self.get(k, m)[0]
    }

    /// Copy restricted to the given devices, in order.
    pub fn select(&self, devices: &[usize]) -> Result<Self, TruthError> {
        if devices.is_empty() {
            return Err(TruthError::Empty);
        }
        let mut values = Vec::with_capacity(devices.len() * self.row_len);
        for &k in devices {
            if k >= self.devices {
                return Err(TruthError::Shape("device index out of range"));
            }
            values.extend_from_slice(self.row(k));
        }
        Ok(Self {
            values,
            devices: devices.len(),
            ..self.clone()
        })
    }

    /// Applies `f` to every continuous reading (used to snap readings onto a
    /// fixed-point grid).
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = self.clone();
        if self.kind == DataKind::Continuous {
            out.values.iter_mut().for_each(|v| *v = f(*v));
        }
        out
    }

    fn layout(&self) -> (Vec<usize>, Vec<usize>) {
        (self.widths.clone(), self.offsets.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    /// Index of the largest weight (first on ties).
    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.0)
    }
}

fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if best.is_none_or(|b| x > v[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthVector {
    widths: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl TruthVector {
    /// One scalar truth per continuous object.
    pub fn scalars(values: Vec<f64>) -> Self {
        let widths = alloc::vec![1; values.len()];
        let (offsets, _) = offsets_of(&widths);
        Self {
            widths,
            offsets,
            values,
        }
    }

    fn with_layout(obs: &ObservationMatrix, values: Vec<f64>) -> Self {
        let (widths, offsets) = obs.layout();
        Self {
            widths,
            offsets,
            values,
        }
    }

    pub fn objects(&self) -> usize {
        self.widths.len()
    }

    pub fn get(&self, m: usize) -> &[f64] {
        &self.values[self.offsets[m]..self.offsets[m] + self.widths[m]]
    }

    pub fn value(&self, m: usize) -> f64 {
        self.values[self.offsets[m]]
    }

    /// Flat values (one per object for continuous data).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Most probable choice for a categorical object.
    pub fn choice(&self, m: usize) -> usize {
        argmax(self.get(m)).unwrap_or(0)
    }

    /// Largest coordinate-wise absolute difference.
    pub fn max_abs_diff(&self, other: &TruthVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationVector {
    /// Per-object means (flat layout, like a truth vector).
    pub mean: Vec<f64>,
    /// Per-object standard deviations, floored.
    pub std: Vec<f64>,
}

/// `(x - x*)² / std` for continuous data, squared Euclidean distance for
/// categorical vectors. `std` is floored at [`EPSILON`].
pub fn distance(obs: &[f64], truth: &[f64], std: f64, kind: DataKind) -> f64 {
    match kind {
        DataKind::Continuous => {
            let d = obs[0] - truth[0];
            d * d / std.max(EPSILON)
        }
        DataKind::Categorical => obs.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum(),
    }
}

/// `Dist_k = Σ_m d(x^k_m, x*_m)`, floored at [`EPSILON`].
pub fn device_distance(
    obs: &ObservationMatrix,
    k: usize,
    truths: &TruthVector,
    dev: &DeviationVector,
) -> f64 {
    let total: f64 = (0..obs.objects())
        .map(|m| distance(obs.get(k, m), truths.get(m), dev.std[m], obs.kind()))
        .sum();
    total.max(EPSILON)
}

/// `w_k = log(Σ Dist / Dist_k)`.
pub fn weights_from_distances(dists: &[f64]) -> WeightVector {
    let total: f64 = dists.iter().sum();
    WeightVector(dists.iter().map(|d| libm::log(total / d)).collect())
}

pub fn update_weights(
    obs: &ObservationMatrix,
    truths: &TruthVector,
    dev: &DeviationVector,
) -> WeightVector {
    let dists: Vec<f64> = (0..obs.devices())
        .map(|k| device_distance(obs, k, truths, dev))
        .collect();
    weights_from_distances(&dists)
}

/// Weighted mean `Σ w_k x^k / Σ w_k`.
pub fn update_truths(obs: &ObservationMatrix, w: &WeightVector) -> Result<TruthVector, TruthError> {
    if w.0.len() != obs.devices() {
        return Err(TruthError::Shape("one weight per device"));
    }
    let total: f64 = w.0.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(TruthError::DegenerateWeights);
    }
    let mut acc = alloc::vec![0.0; obs.row_len];
    for (k, &wk) in w.0.iter().enumerate() {
        for (a, &x) in acc.iter_mut().zip(obs.row(k)) {
            *a += wk * x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(TruthVector::with_layout(obs, acc))
}

/// Per-object mean and population standard deviation (floored).
///
/// Categorical objects get coordinate-wise means and a unit deviation, which
/// their distance ignores.
pub fn std_pass(obs: &ObservationMatrix) -> DeviationVector {
    let k = obs.devices() as f64;
    let mut mean = alloc::vec![0.0; obs.row_len];
    for i in 0..obs.devices() {
        for (a, &x) in mean.iter_mut().zip(obs.row(i)) {
            *a += x;
        }
    }
    mean.iter_mut().for_each(|a| *a /= k);
    let std = (0..obs.objects())
        .map(|m| match obs.kind() {
            DataKind::Categorical => 1.0,
            DataKind::Continuous => {
                let mu = mean[obs.offsets[m]];
                let ss: f64 = (0..obs.devices())
                    .map(|i| (obs.value(i, m) - mu) * (obs.value(i, m) - mu))
                    .sum();
                libm::sqrt(ss / k).max(EPSILON)
            }
        })
        .collect();
    DeviationVector { mean, std }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthInit {
    /// Uniform in `[min_k x^k_m, max_k x^k_m]` per coordinate.
    Uniform,
    /// Per-object mean of all readings.
    Mean,
    Given(TruthVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrhOptions {
    pub iterations: usize,
    pub init: TruthInit,
    pub early_stop: bool,
}

impl Default for CrhOptions {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            init: TruthInit::Uniform,
            early_stop: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub weights: WeightVector,
    pub truths: TruthVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrhOutcome {
    pub truths: TruthVector,
    pub weights: WeightVector,
    pub deviations: DeviationVector,
    pub trace: Vec<IterationTrace>,
}

pub fn initial_truths<R: Rng + ?Sized>(
    obs: &ObservationMatrix,
    init: &TruthInit,
    rng: &mut R,
) -> Result<TruthVector, TruthError> {
    match init {
        TruthInit::Given(t) => {
            if t.widths != obs.widths {
                return Err(TruthError::Shape("initial truths do not match the objects"));
            }
            Ok(t.clone())
        }
        TruthInit::Mean => Ok(TruthVector::with_layout(obs, std_pass(obs).mean)),
        TruthInit::Uniform => {
            let values = (0..obs.row_len)
                .map(|c| {
                    let column = (0..obs.devices()).map(|k| obs.row(k)[c]);
                    let lo = column.clone().fold(f64::INFINITY, f64::min);
                    let hi = column.fold(f64::NEG_INFINITY, f64::max);
                    if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect();
            Ok(TruthVector::with_layout(obs, values))
        }
    }
}

/// CRH with every device present in every round.
pub fn run_crh<R: Rng + ?Sized>(
    obs: &ObservationMatrix,
    opts: &CrhOptions,
    rng: &mut R,
) -> Result<CrhOutcome, TruthError> {
    run_crh_with_presence(obs, opts, rng, &[])
}

/// CRH where round `t` only uses devices with `presence[t][k]` set
/// (rounds beyond `presence.len()` use everyone).
///
/// Deviations come from one pass over all devices, as in the secure
/// pipeline. Absent devices get weight 0 in that round's weight vector.
pub fn run_crh_with_presence<R: Rng + ?Sized>(
    obs: &ObservationMatrix,
    opts: &CrhOptions,
    rng: &mut R,
    presence: &[Vec<bool>],
) -> Result<CrhOutcome, TruthError> {
    let rounds: Vec<RoundPresence> = presence
        .iter()
        .map(|p| RoundPresence {
            weight: p.clone(),
            truth: p.clone(),
        })
        .collect();
    run_crh_with_rounds(obs, opts, rng, &rounds)
}

/// Who took part in one iteration. `truth` must be a subset of `weight`:
/// the distance sum runs over `weight`, the weighted mean over `truth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPresence {
    pub weight: Vec<bool>,
    pub truth: Vec<bool>,
}

pub fn run_crh_with_rounds<R: Rng + ?Sized>(
    obs: &ObservationMatrix,
    opts: &CrhOptions,
    rng: &mut R,
    rounds: &[RoundPresence],
) -> Result<CrhOutcome, TruthError> {
    if opts.iterations == 0 {
        return Err(TruthError::NoIterations);
    }
    let n = obs.devices();
    let deviations = std_pass(obs);
    let mut truths = initial_truths(obs, &opts.init, rng)?;
    let mut weights = WeightVector(alloc::vec![0.0; n]);
    let mut trace = Vec::with_capacity(opts.iterations);
    let members = |mask: &[bool]| -> Result<Vec<usize>, TruthError> {
        if mask.len() != n {
            return Err(TruthError::Shape("presence row length"));
        }
        Ok((0..n).filter(|&k| mask[k]).collect())
    };
    for t in 0..opts.iterations {
        let (in_weight, in_truth) = match rounds.get(t) {
            Some(r) => (members(&r.weight)?, members(&r.truth)?),
            None => ((0..n).collect(), (0..n).collect()),
        };
        if in_truth.is_empty() {
            return Err(TruthError::NobodyPresent);
        }
        if in_truth.iter().any(|k| !in_weight.contains(k)) {
            return Err(TruthError::Shape(
                "truth round member missing from the weight round",
            ));
        }
        let dists: Vec<f64> = in_weight
            .iter()
            .map(|&k| device_distance(obs, k, &truths, &deviations))
            .collect();
        let total: f64 = dists.iter().sum();
        weights = WeightVector(alloc::vec![0.0; n]);
        for (&k, &d) in in_weight.iter().zip(&dists) {
            if in_truth.contains(&k) {
                weights.0[k] = libm::log(total / d);
            }
        }
        let next = if in_truth.len() == 1 {
            // A lone source is the answer whatever its weight.
            TruthVector::with_layout(obs, obs.row(in_truth[0]).to_vec())
        } else {
            let sub = WeightVector(in_truth.iter().map(|&k| weights.0[k]).collect());
            update_truths(&obs.select(&in_truth)?, &sub)?
        };
        let delta = next.max_abs_diff(&truths);
        truths = next;
        trace.push(IterationTrace {
            weights: weights.clone(),
            truths: truths.clone(),
        });
        if opts.early_stop && delta < EARLY_STOP_DELTA {
            break;
        }
    }
    Ok(CrhOutcome {
        truths,
        weights,
        deviations,
        trace,
    })
}

/// Root-mean-square difference between two equal-length slices.
pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::sqrt(ss / a.len() as f64)
}
