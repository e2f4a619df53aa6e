use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Upper bound on rejection-sampling draws per user.
const MAX_DRAWS_PER_USER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// How BSs are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// BSs on a horizontal line, `bs_spacing` apart.
    Line,
    /// BSs on a square-ish grid with `ceil(sqrt(M))` columns.
    Grid,
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Layout::Line => "line",
            Layout::Grid => "grid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "line" => Some(Layout::Line),
            "grid" => Some(Layout::Grid),
            _ => None,
        }
    }

    fn positions(&self, count: usize, spacing: f64) -> Vec<Point> {
        match self {
            Layout::Line => (0..count)
                .map(|m| Point::new(m as f64 * spacing, 0.0))
                .collect(),
            Layout::Grid => {
                let cols = (count as f64).sqrt().ceil().max(1.0) as usize;
                (0..count)
                    .map(|m| Point::new((m % cols) as f64 * spacing, (m / cols) as f64 * spacing))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams {
    pub num_bs: usize,
    pub num_users: usize,
    pub cell_radius: f64,
    pub bs_spacing: f64,
    pub layout: Layout,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            num_bs: 10,
            num_users: 100,
            cell_radius: 150.0,
            bs_spacing: 200.0,
            layout: Layout::Line,
        }
    }
}

/// BSs, users and the K×M connectivity between them.
///
/// `connectivity[k][m]` is set iff user `k` lies within `cell_radius` of BS
/// `m`. `serving_sets[k]` (the BSs of user `k`) and `coverage_sets[m]` (the
/// users of BS `m`) are the row and column supports of that matrix, both in
/// ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub cell_radius: f64,
    pub bs_spacing: f64,
    pub layout: Layout,
    pub seed: u64,
    connectivity: Vec<Vec<bool>>,
    serving_sets: Vec<Vec<usize>>,
    coverage_sets: Vec<Vec<usize>>,
}

impl NetworkInstance {
    /// Builds an instance from explicit positions, deriving connectivity by
    /// the radius rule. Every user must be covered by at least one BS.
    pub fn from_positions(
        bs_positions: Vec<Point>,
        user_positions: Vec<Point>,
        cell_radius: f64,
        bs_spacing: f64,
        layout: Layout,
        seed: u64,
    ) -> Result<Self> {
        if !(cell_radius > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "cell radius must be positive, got {cell_radius}"
            )));
        }
        if bs_positions.is_empty() {
            return Err(Error::InvalidGeometry("at least one BS is required".into()));
        }
        let connectivity: Vec<Vec<bool>> = user_positions
            .iter()
            .map(|u| {
                bs_positions
                    .iter()
                    .map(|b| u.distance(b) <= cell_radius)
                    .collect()
            })
            .collect();
        if let Some(k) = connectivity.iter().position(|row| !row.contains(&true)) {
            return Err(Error::InvalidGeometry(format!(
                "user {k} is not covered by any BS"
            )));
        }
        let num_bs = bs_positions.len();
        let serving_sets: Vec<Vec<usize>> = connectivity
            .iter()
            .map(|row| (0..num_bs).filter(|&m| row[m]).collect())
            .collect();
        let coverage_sets: Vec<Vec<usize>> = (0..num_bs)
            .map(|m| {
                (0..user_positions.len())
                    .filter(|&k| connectivity[k][m])
                    .collect()
            })
            .collect();
        Ok(NetworkInstance {
            bs_positions,
            user_positions,
            cell_radius,
            bs_spacing,
            layout,
            seed,
            connectivity,
            serving_sets,
            coverage_sets,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn is_connected(&self, user: usize, bs: usize) -> bool {
        self.connectivity[user][bs]
    }

    pub fn connectivity(&self) -> &[Vec<bool>] {
        &self.connectivity
    }

    /// BSs covering `user`, ascending.
    pub fn serving(&self, user: usize) -> &[usize] {
        &self.serving_sets[user]
    }

    /// Users covered by `bs`, ascending.
    pub fn coverage(&self, bs: usize) -> &[usize] {
        &self.coverage_sets[bs]
    }

    pub fn distance(&self, user: usize, bs: usize) -> f64 {
        self.user_positions[user].distance(&self.bs_positions[bs])
    }
}

/// Places BSs per `params.layout` and drops users uniformly over the union of
/// the cells by rejection sampling, so every user has at least one serving BS.
pub fn build_grid_topology(params: &TopologyParams, seed: u64) -> Result<NetworkInstance> {
    let TopologyParams {
        num_bs,
        num_users,
        cell_radius,
        bs_spacing,
        layout,
    } = *params;
    if num_bs == 0 || num_users == 0 {
        return Err(Error::InvalidParameter(
            "need at least one BS and one user".into(),
        ));
    }
    if !(cell_radius > 0.0) || !(bs_spacing > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "radius ({cell_radius}) and spacing ({bs_spacing}) must be positive"
        )));
    }
    if num_bs > 1 && cell_radius <= bs_spacing / 2.0 {
        return Err(Error::InvalidGeometry(format!(
            "cell radius {cell_radius} does not exceed half the BS spacing {bs_spacing}; cells would not overlap"
        )));
    }

    let bs_positions = layout.positions(num_bs, bs_spacing);
    let (min_x, max_x, min_y, max_y) = bs_positions.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y)),
    );
    let (x0, x1) = (min_x - cell_radius, max_x + cell_radius);
    let (y0, y1) = (min_y - cell_radius, max_y + cell_radius);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut user_positions = Vec::with_capacity(num_users);
    let max_attempts = MAX_DRAWS_PER_USER * num_users;
    let mut attempts = 0;
    while user_positions.len() < num_users {
        if attempts >= max_attempts {
            return Err(Error::SamplingFailed { attempts });
        }
        attempts += 1;
        let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
        if bs_positions.iter().any(|b| p.distance(b) <= cell_radius) {
            user_positions.push(p);
        }
    }

    NetworkInstance::from_positions(
        bs_positions,
        user_positions,
        cell_radius,
        bs_spacing,
        layout,
        seed,
    )
}
