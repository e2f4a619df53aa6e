use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NetworkInstance;
use crate::{Error, Result};

/// Tolerance on the row sums of the preference matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Per-user Zipf exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    /// The same exponent for every user.
    Constant(f64),
    /// `base + slope * k / K` for the 1-based user index `k`.
    Ramp { base: f64, slope: f64 },
}

impl GammaSpec {
    pub fn gammas(&self, num_users: usize) -> Vec<f64> {
        match *self {
            GammaSpec::Constant(g) => vec![g; num_users],
            GammaSpec::Ramp { base, slope } => (1..=num_users)
                .map(|k| base + slope * k as f64 / num_users as f64)
                .collect(),
        }
    }
}

/// Extra delay for fetching an uncached file over the backhaul, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum BackhaulDelay {
    Uniform(f64),
    /// Indexed `[user][file]`.
    PerRequest(Vec<Vec<f64>>),
}

/// Draws per-user Zipf preferences over randomly permuted file ranks.
///
/// Returns the K×N preference matrix and, per user, the 1-based rank of each
/// file. File `n` of user `k` gets probability `rank^(-γ_k) / Σ_r r^(-γ_k)`.
pub fn zipf_preferences(
    num_files: usize,
    gammas: &[f64],
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<usize>>)> {
    if num_files == 0 {
        return Err(Error::InvalidParameter("need at least one file".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Zipf exponent must be finite and non-negative, got {g}"
        )));
    }
    let mut preferences = Vec::with_capacity(gammas.len());
    let mut permutations = Vec::with_capacity(gammas.len());
    for (k, &gamma) in gammas.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut ranks: Vec<usize> = (1..=num_files).collect();
        ranks.shuffle(&mut rng);
        let weights: Vec<f64> = (1..=num_files).map(|r| (r as f64).powf(-gamma)).collect();
        let total: f64 = weights.iter().sum();
        preferences.push(ranks.iter().map(|&r| weights[r - 1] / total).collect());
        permutations.push(ranks);
    }
    Ok((preferences, permutations))
}

/// User demand: preferences, file size and backhaul delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandModel {
    pub file_bits: f64,
    pub gammas: Vec<f64>,
    /// Per-user 1-based file ranks; empty when preferences were not drawn
    /// from a Zipf law.
    pub permutations: Vec<Vec<usize>>,
    pub backhaul: BackhaulDelay,
    pub seed: u64,
    num_files: usize,
    preferences: Vec<Vec<f64>>,
    support: Vec<Vec<usize>>,
    support_index: Vec<Vec<Option<usize>>>,
}

impl DemandModel {
    pub fn new(
        preferences: Vec<Vec<f64>>,
        num_files: usize,
        file_bits: f64,
        backhaul: BackhaulDelay,
    ) -> Result<Self> {
        if num_files == 0 {
            return Err(Error::InvalidParameter("need at least one file".into()));
        }
        if !(file_bits > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "file size must be positive, got {file_bits}"
            )));
        }
        for (k, row) in preferences.iter().enumerate() {
            if row.len() != num_files {
                return Err(Error::InvalidParameter(format!(
                    "user {k} has {} preferences, expected {num_files}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "user {k} has a negative or non-finite preference"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidParameter(format!(
                    "preferences of user {k} sum to {sum}"
                )));
            }
        }
        match &backhaul {
            BackhaulDelay::Uniform(d) if !(*d > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "backhaul delay must be positive, got {d}"
                )))
            }
            BackhaulDelay::PerRequest(rows) => {
                if rows.len() != preferences.len() || rows.iter().any(|r| r.len() != num_files) {
                    return Err(Error::InvalidParameter(
                        "backhaul delay matrix must be K×N".into(),
                    ));
                }
                if rows.iter().flatten().any(|d| !(*d > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "backhaul delays must be positive".into(),
                    ));
                }
            }
            _ => {}
        }

        let support: Vec<Vec<usize>> = preferences
            .iter()
            .map(|row| (0..num_files).filter(|&n| row[n] > 0.0).collect())
            .collect();
        let support_index = support
            .iter()
            .map(|files| {
                let mut idx = vec![None; num_files];
                for (pos, &n) in files.iter().enumerate() {
                    idx[n] = Some(pos);
                }
                idx
            })
            .collect();
        Ok(DemandModel {
            file_bits,
            gammas: Vec::new(),
            permutations: Vec::new(),
            backhaul,
            seed: 0,
            num_files,
            preferences,
            support,
            support_index,
        })
    }

    /// Zipf demand for `gammas.len()` users.
    pub fn zipf(
        num_files: usize,
        gammas: Vec<f64>,
        file_bits: f64,
        backhaul: BackhaulDelay,
        seed: u64,
    ) -> Result<Self> {
        let (preferences, permutations) = zipf_preferences(num_files, &gammas, seed)?;
        let mut demand = DemandModel::new(preferences, num_files, file_bits, backhaul)?;
        demand.gammas = gammas;
        demand.permutations = permutations;
        demand.seed = seed;
        Ok(demand)
    }

    /// Same demand parameters with a different preference matrix.
    pub fn with_preferences(&self, preferences: Vec<Vec<f64>>) -> Result<Self> {
        let mut demand =
            DemandModel::new(preferences, self.num_files, self.file_bits, self.backhaul.clone())?;
        demand.gammas = self.gammas.clone();
        demand.permutations = self.permutations.clone();
        demand.seed = self.seed;
        Ok(demand)
    }

    pub fn num_files(&self) -> usize {
        self.num_files
    }

    pub fn num_users(&self) -> usize {
        self.preferences.len()
    }

    pub fn preference(&self, user: usize, file: usize) -> f64 {
        self.preferences[user][file]
    }

    pub fn preferences(&self) -> &[Vec<f64>] {
        &self.preferences
    }

    pub fn backhaul_delay(&self, user: usize, file: usize) -> f64 {
        match &self.backhaul {
            BackhaulDelay::Uniform(d) => *d,
            BackhaulDelay::PerRequest(rows) => rows[user][file],
        }
    }

    /// Files user `k` requests with positive probability, ascending.
    pub fn support(&self, user: usize) -> &[usize] {
        &self.support[user]
    }

    /// Position of `file` within `support(user)`.
    pub fn support_index(&self, file: usize, user: usize) -> Option<usize> {
        self.support_index[user][file]
    }

    /// All (file, user) pairs with positive preference, user-major.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.support
            .iter()
            .enumerate()
            .flat_map(|(k, files)| files.iter().map(move |&n| (n, k)))
    }
}

/// Network-wide and per-cell average file popularity.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityAggregates {
    pub global: Vec<f64>,
    /// Indexed `[bs][file]`.
    pub local: Vec<Vec<f64>>,
    /// BSs with no users; their local row is uniform.
    pub empty_cells: Vec<usize>,
}

pub fn aggregate_popularity(
    demand: &DemandModel,
    instance: &NetworkInstance,
) -> PopularityAggregates {
    let n_files = demand.num_files();
    let average = |users: &mut dyn Iterator<Item = usize>| {
        let mut acc = vec![0.0; n_files];
        let mut count = 0usize;
        for k in users {
            count += 1;
            for (a, p) in acc.iter_mut().zip(&demand.preferences[k]) {
                *a += p;
            }
        }
        if count == 0 {
            return None;
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
        Some(acc)
    };

    let global = average(&mut (0..demand.num_users()))
        .unwrap_or_else(|| vec![1.0 / n_files as f64; n_files]);
    let mut empty_cells = Vec::new();
    let local = (0..instance.num_bs())
        .map(|m| {
            average(&mut instance.coverage(m).iter().copied()).unwrap_or_else(|| {
                empty_cells.push(m);
                vec![1.0 / n_files as f64; n_files]
            })
        })
        .collect();
    PopularityAggregates {
        global,
        local,
        empty_cells,
    }
}
