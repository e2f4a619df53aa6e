//! Average download delay of a cache placement.
//!
//! A request is served from the caches of its serving BSs when any of them
//! holds the file, at delay `|f| / E{R}` over the transmitting subset;
//! otherwise the file is fetched over the backhaul first, adding `D_nk` to
//! the delivery over the whole serving set.

use std::fmt::Write as _;

use crate::model::DemandModel;
use crate::rates::{ExpectedRateTable, Scheme};
use crate::{Error, Result};

/// Binary placement `x_nm` with per-BS capacities.
///
/// Ground-set element `i = m * N + n` (0-based) stands for "file `n` at BS `m`".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    num_files: usize,
    capacities: Vec<usize>,
    cached: Vec<bool>,
    counts: Vec<usize>,
}

impl Placement {
    pub fn empty(num_files: usize, capacities: Vec<usize>) -> Self {
        let cached = vec![false; num_files * capacities.len()];
        let counts = vec![0; capacities.len()];
        Placement {
            num_files,
            capacities,
            cached,
            counts,
        }
    }

    /// Placement from per-BS file lists. Capacities are not enforced here.
    pub fn from_sets(num_files: usize, capacities: Vec<usize>, sets: &[Vec<usize>]) -> Self {
        let mut p = Placement::empty(num_files, capacities);
        for (m, files) in sets.iter().enumerate() {
            for &n in files {
                p.insert(n, m);
            }
        }
        p
    }

    pub fn num_files(&self) -> usize {
        self.num_files
    }

    pub fn num_bs(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn capacity(&self, m: usize) -> usize {
        self.capacities[m]
    }

    pub fn ground_index(&self, n: usize, m: usize) -> usize {
        m * self.num_files + n
    }

    /// `(file, bs)` of a ground-set index.
    pub fn element(&self, i: usize) -> (usize, usize) {
        (i % self.num_files, i / self.num_files)
    }

    pub fn is_cached(&self, n: usize, m: usize) -> bool {
        self.cached[m * self.num_files + n]
    }

    /// Caches file `n` at BS `m`; returns false if it was already there.
    pub fn insert(&mut self, n: usize, m: usize) -> bool {
        let i = self.ground_index(n, m);
        if self.cached[i] {
            return false;
        }
        self.cached[i] = true;
        self.counts[m] += 1;
        true
    }

    pub fn remove(&mut self, n: usize, m: usize) -> bool {
        let i = self.ground_index(n, m);
        if !self.cached[i] {
            return false;
        }
        self.cached[i] = false;
        self.counts[m] -= 1;
        true
    }

    /// Number of files cached at BS `m`.
    pub fn count(&self, m: usize) -> usize {
        self.counts[m]
    }

    pub fn total_cached(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Files cached at BS `m`, ascending.
    pub fn files_at(&self, m: usize) -> Vec<usize> {
        let row = &self.cached[m * self.num_files..(m + 1) * self.num_files];
        row.iter()
            .enumerate()
            .filter_map(|(n, &c)| c.then_some(n))
            .collect()
    }

    /// Per-BS cached-file lists.
    pub fn sets(&self) -> Vec<Vec<usize>> {
        (0..self.num_bs()).map(|m| self.files_at(m)).collect()
    }

    /// Ground-set indices of all cached elements, ascending.
    pub fn elements(&self) -> Vec<usize> {
        self.cached
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
            .collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.counts.iter().zip(&self.capacities).all(|(c, q)| c <= q)
    }

    /// Errors with the first BS over its capacity.
    pub fn check_feasible(&self) -> Result<()> {
        match (0..self.num_bs()).find(|&m| self.counts[m] > self.capacities[m]) {
            Some(bs) => Err(Error::Infeasible {
                bs,
                cached: self.counts[bs],
                capacity: self.capacities[bs],
            }),
            None => Ok(()),
        }
    }
}

/// Whether `objective` accepts placements over capacity (used mid-BP).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Required,
    InfeasibleAllowed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub average_delay_s: f64,
    pub hit_probability: f64,
    /// `Σ_n p_nk D_nk` per user.
    pub per_user_delay_s: Vec<f64>,
    /// Per user, whether each file would be served from a cache.
    pub cached_requests: Vec<Vec<bool>>,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "scheme,average_delay_s,hit_probability,cached_requests";

    /// One CSV row in `CSV_HEADER` order.
    pub fn csv_row(&self) -> String {
        let cached: usize = self
            .cached_requests
            .iter()
            .map(|row| row.iter().filter(|c| **c).count())
            .sum();
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{:.9e},{:.9e},{}",
            self.scheme.name(),
            self.average_delay_s,
            self.hit_probability,
            cached
        );
        s
    }
}

/// Delay evaluation over a fixed rate table and demand model.
#[derive(Debug, Clone, Copy)]
pub struct DelayModel<'a> {
    pub table: &'a ExpectedRateTable,
    pub demand: &'a DemandModel,
}

impl<'a> DelayModel<'a> {
    /// Checks table/demand compatibility and that every uncached delivery
    /// is slower than any cached one, for every request with positive
    /// probability.
    pub fn new(table: &'a ExpectedRateTable, demand: &'a DemandModel) -> Result<Self> {
        if table.num_users() != demand.num_users() {
            return Err(Error::TableMismatch(format!(
                "rate table has {} users, demand has {}",
                table.num_users(),
                demand.num_users()
            )));
        }
        let model = DelayModel { table, demand };
        for k in 0..demand.num_users() {
            let full = table.full_mask(k);
            let slowest_hit = (1..=full)
                .map(|mask| demand.file_bits / table.rate(k, mask))
                .fold(0.0, f64::max);
            for &n in demand.support(k) {
                let miss = model.delay_for_mask(k, n, 0);
                if !(miss > slowest_hit) {
                    return Err(Error::Configuration(format!(
                        "uncached delay {miss:.3} s of user {k}, file {n} does not exceed the slowest cached delivery {slowest_hit:.3} s; increase the backhaul delay"
                    )));
                }
            }
        }
        Ok(model)
    }

    pub fn scheme(&self) -> Scheme {
        self.table.scheme
    }

    pub fn num_users(&self) -> usize {
        self.demand.num_users()
    }

    pub fn num_files(&self) -> usize {
        self.demand.num_files()
    }

    /// For each BS, the users it serves with that BS's bit in their masks.
    pub fn coverage(&self, num_bs: usize) -> Vec<Vec<(usize, u32)>> {
        let mut cov = vec![Vec::new(); num_bs];
        for k in 0..self.num_users() {
            for (b, &m) in self.table.serving(k).iter().enumerate() {
                cov[m].push((k, 1u32 << b));
            }
        }
        cov
    }

    /// Serving BSs of user `k` that hold file `n`, as a rate-table mask.
    pub fn caching_mask(&self, k: usize, n: usize, placement: &Placement) -> u32 {
        self.table
            .serving(k)
            .iter()
            .enumerate()
            .filter(|(_, &m)| placement.is_cached(n, m))
            .fold(0, |acc, (b, _)| acc | 1 << b)
    }

    /// Delay of request `(n, k)` when the caching serving BSs are `mask`.
    pub fn delay_for_mask(&self, k: usize, n: usize, mask: u32) -> f64 {
        let bits = self.demand.file_bits;
        if mask != 0 {
            bits / self.table.rate(k, mask)
        } else {
            self.demand.backhaul_delay(k, n) + bits / self.table.fetch_rate(k)
        }
    }

    pub fn request_delay(&self, k: usize, n: usize, placement: &Placement) -> f64 {
        self.delay_for_mask(k, n, self.caching_mask(k, n, placement))
    }

    /// BSs that transmit file `n` to user `k`: all caching serving BSs under
    /// beamforming, the best caching one otherwise (lower index on ties).
    pub fn serving_subset(&self, k: usize, n: usize, placement: &Placement) -> Vec<usize> {
        let mask = self.caching_mask(k, n, placement);
        let serving = self.table.serving(k);
        let members = (0..serving.len()).filter(|b| mask & (1 << b) != 0);
        match self.scheme() {
            Scheme::CooperativeBeamforming => members.map(|b| serving[b]).collect(),
            Scheme::NonCooperative => {
                let mut best: Option<usize> = None;
                for b in members {
                    if best.is_none_or(|c| self.table.rate(k, 1 << b) > self.table.rate(k, 1 << c)) {
                        best = Some(b);
                    }
                }
                best.map(|b| vec![serving[b]]).unwrap_or_default()
            }
        }
    }

    /// `Σ_n p_nk D_nk` for one user.
    pub fn user_delay(&self, k: usize, placement: &Placement) -> f64 {
        self.demand
            .support(k)
            .iter()
            .map(|&n| self.demand.preference(k, n) * self.request_delay(k, n, placement))
            .sum()
    }

    /// `(1/K) Σ_k Σ_n p_nk D_nk`, without feasibility checks; 0 without users.
    pub fn average_delay(&self, placement: &Placement) -> f64 {
        if self.num_users() == 0 {
            return 0.0;
        }
        let total: f64 = (0..self.num_users())
            .map(|k| self.user_delay(k, placement))
            .sum();
        total / self.num_users() as f64
    }

    pub fn hit_probability(&self, placement: &Placement) -> f64 {
        if self.num_users() == 0 {
            return 0.0;
        }
        let total: f64 = (0..self.num_users())
            .map(|k| {
                self.demand
                    .support(k)
                    .iter()
                    .filter(|&&n| self.caching_mask(k, n, placement) != 0)
                    .map(|&n| self.demand.preference(k, n))
                    .sum::<f64>()
            })
            .sum();
        total / self.num_users() as f64
    }

    pub fn objective(&self, placement: &Placement, feasibility: Feasibility) -> Result<EvalReport> {
        if feasibility == Feasibility::Required {
            placement.check_feasible()?;
        }
        let mut per_user = Vec::with_capacity(self.num_users());
        let mut cached_requests = Vec::with_capacity(self.num_users());
        let mut hit = 0.0;
        for k in 0..self.num_users() {
            let mut flags = vec![false; self.num_files()];
            let mut delay = 0.0;
            for &n in self.demand.support(k) {
                let mask = self.caching_mask(k, n, placement);
                let p = self.demand.preference(k, n);
                delay += p * self.delay_for_mask(k, n, mask);
                if mask != 0 {
                    flags[n] = true;
                    hit += p;
                }
            }
            per_user.push(delay);
            cached_requests.push(flags);
        }
        let users = self.num_users().max(1) as f64;
        Ok(EvalReport {
            scheme: self.scheme(),
            average_delay_s: per_user.iter().sum::<f64>() / users,
            hit_probability: hit / users,
            per_user_delay_s: per_user,
            cached_requests,
        })
    }
}
